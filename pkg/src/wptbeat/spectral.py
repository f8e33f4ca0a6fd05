"""Frequency grid and multi-frequency (harmonic) algebra.

All harmonic vectors and matrices in this package share one ordering
convention: coefficients are stored for k = +K, ..., +1, 0, -1, ..., -K
(descending harmonic index).  Position p in an array of length 2K+1 holds
the coefficient of exp(i*2*pi*k*f_base*t) with k = K - p.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import toeplitz

from .errors import NonRealResult, RationalizationFailure

# Largest allowed harmonic ratio; the assembled system is (6*max(M1,M2)+1)
# per state and must stay desk-scale.
M_MAX_DEFAULT = 4000

NONREAL_RTOL = 1e-9


@dataclass(frozen=True)
class FrequencyGrid:
    """Common integer grid for two fundamentals f1 = m1*f_base, f2 = m2*f_base."""

    f_base: float
    m1: int
    m2: int
    k_max: int
    beat_index: int = field(init=False)

    def __post_init__(self):
        if self.m1 <= 0 or self.m2 <= 0 or self.f_base <= 0:
            raise ValueError("grid requires positive f_base, m1, m2")
        if math.gcd(self.m1, self.m2) != 1:
            raise ValueError("m1 and m2 must be coprime on the coarsest grid")
        object.__setattr__(self, "beat_index", abs(self.m1 - self.m2))

    @property
    def f1(self) -> float:
        return self.m1 * self.f_base

    @property
    def f2(self) -> float:
        return self.m2 * self.f_base

    @property
    def beat_frequency(self) -> float:
        return self.beat_index * self.f_base

    def harmonic_indices(self, k_max=None) -> np.ndarray:
        """Harmonic indices in storage order (k = +K .. -K)."""
        k = self.k_max if k_max is None else k_max
        return np.arange(k, -k - 1, -1)


@dataclass(frozen=True)
class HarmonicVector:
    """Complex Fourier coefficients of one signal on a FrequencyGrid.

    coeffs[p] is the coefficient of exp(i*2*pi*(k_max - p)*f_base*t).
    """

    coeffs: np.ndarray
    k_max: int
    f_base: float

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != 1 or c.size != 2 * self.k_max + 1:
            raise ValueError(
                f"expected {2 * self.k_max + 1} coefficients, got {c.size}"
            )
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def __getitem__(self, k: int) -> complex:
        if abs(k) > self.k_max:
            return 0.0 + 0.0j
        return complex(self.coeffs[self.k_max - k])

    def is_conjugate_symmetric(self, rtol: float = NONREAL_RTOL) -> bool:
        scale = float(np.max(np.abs(self.coeffs))) or 1.0
        return bool(
            np.all(np.abs(self.coeffs - np.conj(self.coeffs[::-1])) <= rtol * scale)
        )

    def truncated(self, k_max: int) -> "HarmonicVector":
        """Zero-padded or truncated copy on a different k range."""
        out = np.zeros(2 * k_max + 1, dtype=complex)
        lo = min(self.k_max, k_max)
        for k in range(-lo, lo + 1):
            out[k_max - k] = self[k]
        return HarmonicVector(out, k_max, self.f_base)


def harmonic_vector_from_dict(entries: dict, k_max: int, f_base: float) -> HarmonicVector:
    """Build a HarmonicVector from a {harmonic index: coefficient} mapping."""
    coeffs = np.zeros(2 * k_max + 1, dtype=complex)
    for k, v in entries.items():
        if abs(k) > k_max:
            continue
        coeffs[k_max - k] = v
    return HarmonicVector(coeffs, k_max, f_base)


def build_frequency_grid(
    f1: float,
    f2: float,
    rationalization_tolerance: float = 1e-9,
    m_max: int = M_MAX_DEFAULT,
) -> FrequencyGrid:
    """Place f1 and f2 on a common grid with f_base their greatest common divisor.

    Frequencies are rounded to integer Hz first; the base frequency is then
    the exact integer gcd.  Raises RationalizationFailure if the rounding
    exceeds the relative tolerance or the resulting harmonic ratios exceed
    m_max (incommensurate inputs).
    """
    if f1 <= 0 or f2 <= 0:
        raise ValueError("frequencies must be positive")
    n1, n2 = round(f1), round(f2)
    if n1 == 0 or n2 == 0:
        raise RationalizationFailure(f"frequencies below 1 Hz: {f1}, {f2}")
    for f, n in ((f1, n1), (f2, n2)):
        if abs(f - n) / f > rationalization_tolerance:
            raise RationalizationFailure(
                f"{f} Hz is not an integer frequency within "
                f"relative tolerance {rationalization_tolerance}"
            )
    g = math.gcd(n1, n2)
    m1, m2 = n1 // g, n2 // g
    if max(m1, m2) > m_max:
        raise RationalizationFailure(
            f"harmonic ratios ({m1}, {m2}) exceed the limit {m_max}; "
            "frequencies are effectively incommensurate"
        )
    return FrequencyGrid(f_base=float(g), m1=m1, m2=m2, k_max=2 * max(m1, m2))


def differentiation_matrix(grid: FrequencyGrid, k_max: int) -> np.ndarray:
    """Diagonal matrix of i*2*pi*k*f_base in storage order (k = +K .. -K)."""
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    k = grid.harmonic_indices(k_max)
    return np.diag(1j * 2.0 * np.pi * k * grid.f_base)


def convolution_matrix(spectrum: HarmonicVector, k_max=None) -> np.ndarray:
    """Toeplitz matrix mapping harmonic vectors to the truncated product spectrum.

    The input spectrum should cover |k| <= 2*k_max (missing entries count as
    zero).  With both vectors in descending-k order, the product y = T @ x
    satisfies y<k> = sum_n spectrum<n> * x<k-n>, truncated to |k| <= k_max,
    i.e. T[r, c] = spectrum<c - r>.
    """
    if k_max is None:
        k_max = spectrum.k_max // 2
    n = 2 * k_max + 1
    first_col = np.array([spectrum[-r] for r in range(n)], dtype=complex)
    first_row = np.array([spectrum[c] for c in range(n)], dtype=complex)
    return toeplitz(first_col, first_row)


def evaluate_waveform(h: HarmonicVector, t, rtol: float = NONREAL_RTOL):
    """Reconstruct the real time-domain value sum_k c_k * exp(i*2*pi*k*f_base*t).

    Accepts a scalar or array of times.  Raises NonRealResult if the imaginary
    residue exceeds rtol relative to the largest coefficient magnitude
    (broken conjugate symmetry).
    """
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    k = np.arange(h.k_max, -h.k_max - 1, -1)
    phases = np.exp(1j * 2.0 * np.pi * h.f_base * np.outer(t_arr, k))
    values = phases @ h.coeffs
    scale = float(np.max(np.abs(h.coeffs)))
    tol = rtol * scale if scale > 0 else rtol
    worst = float(np.max(np.abs(values.imag))) if values.size else 0.0
    if worst > tol * (2 * h.k_max + 1):
        raise NonRealResult(
            f"imaginary residue {worst:.3e} exceeds tolerance; "
            "harmonic vector is not conjugate-symmetric"
        )
    out = values.real
    return float(out[0]) if np.isscalar(t) or np.ndim(t) == 0 else out
