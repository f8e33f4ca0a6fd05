"""Closed-form spectra of the receiver's sources.

Covers the sinusoidal coil current, the half-wave rectified current feeding
the DC link, the buck switching function, and the switching function's
derivative with respect to duty cycle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import FrequencyGrid, HarmonicVector, build_frequency_grid


@dataclass(frozen=True)
class CircuitParams:
    """Physical parameters of the two-stage receiver (SI units)."""

    i_ls_amplitude: float  # coil current amplitude, A
    f1: float              # rectifier input frequency, Hz
    f2: float              # buck switching frequency, Hz
    duty: float            # buck duty cycle, (0, 1)
    c_dc: float            # DC-link capacitance, F
    l: float               # buck inductance, H
    c_o: float             # output capacitance, F
    r_load: float          # load resistance, ohm

    def __post_init__(self):
        for name in ("i_ls_amplitude", "f1", "f2", "c_dc", "l", "c_o", "r_load"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        if not 0.0 < self.duty < 1.0:
            raise ValueError("duty must lie in (0, 1)")

    def grid(self, rationalization_tolerance: float = 1e-9) -> FrequencyGrid:
        return build_frequency_grid(self.f1, self.f2, rationalization_tolerance)

    def replace(self, **changes) -> "CircuitParams":
        from dataclasses import replace

        return replace(self, **changes)


# Reference bench parameters of the two-stage receiver, kept here because
# several analyses and the bundled configs use them as the default bench.
PAPER_PARAMS = CircuitParams(
    i_ls_amplitude=1.4,
    f1=200e3,
    f2=185e3,
    duty=0.5,
    c_dc=1e-6,
    l=33e-6,
    c_o=50e-6,
    r_load=6.0,
)


def coil_current_spectrum(params: CircuitParams, grid: FrequencyGrid) -> HarmonicVector:
    """Spectrum of i_ls(t) = I_ls * sin(2*pi*f1*t): lines at +-m1 only."""
    coeffs = np.zeros(2 * grid.k_max + 1, dtype=complex)
    m1 = grid.m1
    coeffs[grid.k_max - m1] = -0.5j * params.i_ls_amplitude
    coeffs[grid.k_max + m1] = +0.5j * params.i_ls_amplitude
    return HarmonicVector(coeffs, grid.k_max, grid.f_base)


def rectified_current_spectrum(params: CircuitParams, grid: FrequencyGrid) -> HarmonicVector:
    """Spectrum of the half-wave rectified coil current i_r(t).

    DC term I/pi, fundamental -+i*I/4 at +-m1, and -I/(3*pi) at +-2*m1;
    higher even harmonics fall outside the state truncation.
    """
    i_amp = params.i_ls_amplitude
    coeffs = np.zeros(2 * grid.k_max + 1, dtype=complex)
    m1, K = grid.m1, grid.k_max
    coeffs[K] = i_amp / np.pi
    coeffs[K - m1] = -0.25j * i_amp
    coeffs[K + m1] = +0.25j * i_amp
    if 2 * m1 <= K:
        coeffs[K - 2 * m1] = -i_amp / (3.0 * np.pi)
        coeffs[K + 2 * m1] = -i_amp / (3.0 * np.pi)
    return HarmonicVector(coeffs, K, grid.f_base)


def switching_spectrum(
    duty: float, grid: FrequencyGrid, phase: float = 0.0
) -> HarmonicVector:
    """Spectrum of the buck switching function, resolved to |k| <= 2*k_max.

    The switch is on for the first duty fraction of each period 1/f2.  The
    extended range keeps the convolution matrix on the state grid fully
    populated.  `phase` delays the pattern by that fraction of a switching
    period (default 0, edges at t = n/f2).
    """
    if not 0.0 < duty < 1.0:
        raise ValueError("duty must lie in (0, 1)")
    k_ext = 2 * grid.k_max
    coeffs = np.zeros(2 * k_ext + 1, dtype=complex)
    coeffs[k_ext] = duty
    for k in range(grid.m2, k_ext + 1, grid.m2):
        n = k // grid.m2
        c = grid.m2 / (2.0 * k * np.pi * 1j) * (1.0 - np.exp(-2j * np.pi * n * duty))
        coeffs[k_ext - k] = c
        coeffs[k_ext + k] = np.conj(c)
    if phase != 0.0:
        k_idx = np.arange(k_ext, -k_ext - 1, -1)
        coeffs *= np.exp(-2j * np.pi * k_idx * phase / grid.m2)
    return HarmonicVector(coeffs, k_ext, grid.f_base)


def switching_spectrum_derivative(
    duty: float, grid: FrequencyGrid, phase: float = 0.0
) -> HarmonicVector:
    """Entrywise derivative of switching_spectrum with respect to duty."""
    if not 0.0 < duty < 1.0:
        raise ValueError("duty must lie in (0, 1)")
    k_ext = 2 * grid.k_max
    coeffs = np.zeros(2 * k_ext + 1, dtype=complex)
    coeffs[k_ext] = 1.0
    for k in range(grid.m2, k_ext + 1, grid.m2):
        n = k // grid.m2
        c = np.exp(-2j * np.pi * n * duty)
        coeffs[k_ext - k] = c
        coeffs[k_ext + k] = np.conj(c)
    if phase != 0.0:
        k_idx = np.arange(k_ext, -k_ext - 1, -1)
        coeffs *= np.exp(-2j * np.pi * k_idx * phase / grid.m2)
    return HarmonicVector(coeffs, k_ext, grid.f_base)
