"""Harmonic-domain dynamic model assembly and periodic steady-state solve.

The three states (DC-link voltage, inductor current, output voltage) are
stacked as harmonic vectors; switching multiplication becomes a Toeplitz
convolution block and differentiation a diagonal block.  The steady state
is the single linear solve x = -A^{-1} b.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IndexOutOfGrid, SingularSystem
from .excitation import (
    CircuitParams,
    rectified_current_spectrum,
    switching_spectrum,
)
from .spectral import (
    FrequencyGrid,
    HarmonicVector,
    convolution_matrix,
    differentiation_matrix,
)

COND_LIMIT = 1e12
SIGNALS = ("v_dc", "i_l", "v_o")


@dataclass(frozen=True)
class SteadyStateSolution:
    v_dc: HarmonicVector
    i_l: HarmonicVector
    v_o: HarmonicVector
    residual_norm: float

    def signal(self, name: str) -> HarmonicVector:
        if name not in SIGNALS:
            raise ValueError(f"unknown signal {name!r}; expected one of {SIGNALS}")
        return getattr(self, name)


def assemble_system(
    params: CircuitParams, grid: FrequencyGrid, switch_phase: float = 0.0
):
    """Build (A, b) such that the harmonic states obey dx/dt = A x + b.

    A is 3x3 blocks of size (2*k_max+1); b stacks the rectified-current
    spectrum over C_DC above two zero blocks.
    """
    n = 2 * grid.k_max + 1
    omega = differentiation_matrix(grid, grid.k_max)
    s_conv = convolution_matrix(switching_spectrum(params.duty, grid, switch_phase),
                                grid.k_max)
    eye = np.eye(n, dtype=complex)
    zero = np.zeros((n, n), dtype=complex)

    a = np.block([
        [-omega, -s_conv / params.c_dc, zero],
        [s_conv / params.l, -omega, -eye / params.l],
        [zero, eye / params.c_o, -omega - eye / (params.r_load * params.c_o)],
    ])
    b = np.zeros(3 * n, dtype=complex)
    b[:n] = rectified_current_spectrum(params, grid).coeffs / params.c_dc
    return a, b


def solve_steady_state(
    params: CircuitParams, grid: FrequencyGrid, switch_phase: float = 0.0
) -> SteadyStateSolution:
    """Periodic steady state of the harmonic model: x = -A^{-1} b."""
    a, b = assemble_system(params, grid, switch_phase)
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularSystem(
            f"harmonic system condition estimate {cond:.3e} exceeds {COND_LIMIT:.0e} "
            "(degenerate configuration, e.g. duty near 0)"
        )
    x = np.linalg.solve(a, -b)
    residual = float(np.linalg.norm(a @ x + b) / np.linalg.norm(b))
    n = 2 * grid.k_max + 1
    mk = lambda c: HarmonicVector(c, grid.k_max, grid.f_base)
    return SteadyStateSolution(
        v_dc=mk(x[:n]), i_l=mk(x[n:2 * n]), v_o=mk(x[2 * n:]),
        residual_norm=residual,
    )


def line_amplitude(sol: SteadyStateSolution, signal: str, k: int) -> float:
    """Amplitude of the real signal's spectral line at harmonic k.

    For k != 0 the positive- and negative-index lines fold: amplitude is
    2*|c_k|; the DC line is |c_0|.
    """
    vec = sol.signal(signal)
    if abs(k) > vec.k_max:
        raise IndexOutOfGrid(f"harmonic {k} outside |k| <= {vec.k_max}")
    c = vec[k]
    return abs(c) if k == 0 else 2.0 * abs(c)
