"""Linearized harmonic model, duty-to-output frequency response, and loop
metrics with the type II + resonant compensator pair."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoCrossover
from .excitation import CircuitParams, switching_spectrum_derivative
from .spectral import FrequencyGrid, convolution_matrix
from .steady_state import assemble_system, solve_steady_state
from .time_sim import CompensatorParams

BODE_POINTS_PER_DECADE = 200
BODE_BAND = (1.0, 1e5)


@dataclass(frozen=True)
class FrequencyResponse:
    points: list  # (frequency Hz, complex gain)
    reference: str

    def __post_init__(self):
        freqs = [f for f, _ in self.points]
        if any(b <= a for a, b in zip(freqs, freqs[1:])):
            raise ValueError("frequencies must be strictly increasing")
        if not all(np.isfinite(g) for _, g in self.points):
            raise ValueError("gains must be finite")

    @property
    def freqs(self) -> np.ndarray:
        return np.array([f for f, _ in self.points])

    @property
    def gains(self) -> np.ndarray:
        return np.array([g for _, g in self.points])


@dataclass(frozen=True)
class LoopMetrics:
    crossover_hz: float
    phase_margin_deg: float
    gain_db_at: list  # (Hz, dB)


def linearize(params: CircuitParams, grid: FrequencyGrid,
              switch_phase: float = 0.0):
    """State matrix A and duty-input vector B of the linearized harmonic model.

    A is the steady-state block matrix; B applies the duty derivative of the
    switching spectrum to the steady-state inductor current and DC-link
    voltage (the output-voltage block is zero).
    """
    a, _ = assemble_system(params, grid, switch_phase)
    sol = solve_steady_state(params, grid, switch_phase)
    dsdd = convolution_matrix(
        switching_spectrum_derivative(params.duty, grid, switch_phase),
        grid.k_max)
    n = 2 * grid.k_max + 1
    b = np.zeros(3 * n, dtype=complex)
    b[:n] = -(dsdd @ sol.i_l.coeffs) / params.c_dc
    b[n:2 * n] = (dsdd @ sol.v_dc.coeffs) / params.l
    return a, b


def _modal_residues(params: CircuitParams, grid: FrequencyGrid,
                    switch_phase: float = 0.0):
    """Eigen-expansion of G(s) = C (sI - A)^{-1} B as sum r_i / (s - lam_i).

    One dense eigendecomposition makes dense Bode scans O(n) per frequency
    instead of one linear solve each.
    """
    a, b = linearize(params, grid, switch_phase)
    n = 2 * grid.k_max + 1
    row = 2 * n + grid.k_max  # k = 0 position of the v_o partition
    lam, vecs = np.linalg.eig(a)
    w = np.linalg.solve(vecs, b)
    residues = vecs[row, :] * w
    return lam, residues


def duty_to_output_response(params: CircuitParams, grid: FrequencyGrid,
                            freqs, switch_phase: float = 0.0) -> FrequencyResponse:
    """G(j*omega) from duty perturbation to the DC line of the output voltage."""
    lam, res = _modal_residues(params, grid, switch_phase)
    points = []
    for f in sorted(float(f) for f in freqs):
        s = 2j * np.pi * f
        points.append((f, complex(np.sum(res / (s - lam)))))
    return FrequencyResponse(points, reference="duty -> V_o<0>, V per unit duty")


def type2_gain(comp: CompensatorParams, f) -> complex:
    """G_c(j*2*pi*f): integrator with one zero and one pole."""
    s = 2j * np.pi * np.asarray(f, dtype=float)
    wz, wp = 2.0 * np.pi * comp.f_z, 2.0 * np.pi * comp.f_p
    return comp.k_c * (1.0 + s / wz) / (s * (1.0 + s / wp))


def resonant_gain(comp: CompensatorParams, f) -> complex:
    """G_b(j*2*pi*f): undamped resonator centred at f_b_target."""
    s = 2j * np.pi * np.asarray(f, dtype=float)
    wb = 2.0 * np.pi * comp.f_b_target
    return comp.k_b * s / (s * s + wb * wb)


def compensator_gain(comp: CompensatorParams, f) -> complex:
    """Parallel sum of the two compensator sections."""
    return type2_gain(comp, f) + resonant_gain(comp, f)


def default_scan(band=BODE_BAND, points_per_decade=BODE_POINTS_PER_DECADE) -> np.ndarray:
    lo, hi = np.log10(band[0]), np.log10(band[1])
    n = int(round((hi - lo) * points_per_decade)) + 1
    return np.logspace(lo, hi, n)


def loop_metrics(params: CircuitParams, grid: FrequencyGrid,
                 comp: CompensatorParams, scan=None,
                 gain_at=(1.0, None)) -> LoopMetrics:
    """Loop gain T = (G_c + G_b) * G over the scan band.

    Crossover is located by log-linear interpolation between adjacent scan
    points; phase margin is 180 deg plus the interpolated phase there.
    gain_at lists frequencies to report |T| in dB at; None entries mean the
    resonant centre f_b_target, which is evaluated at the nearest scan point
    because the continuous-time resonator is unbounded at its pole.
    """
    if scan is None:
        scan = default_scan()
    scan = np.sort(np.asarray(scan, dtype=float))
    if np.any(np.abs(scan - comp.f_b_target) < 1e-9):
        scan = scan[np.abs(scan - comp.f_b_target) >= 1e-9]
    lam, res = _modal_residues(params, grid)
    # Loop transmission includes the error-sense inversion that makes the
    # DC feedback negative: the plant's duty-to-output DC gain is negative
    # for the current-fed receiver.
    plant = -np.array([np.sum(res / (2j * np.pi * f - lam)) for f in scan])
    t = np.array([compensator_gain(comp, f) for f in scan]) * plant
    mag = np.abs(t)
    phase = np.unwrap(np.angle(t))

    crossover = None
    pm = None
    logf = np.log10(scan)
    logm = np.log10(mag)
    for i in range(len(scan) - 1):
        if logm[i] >= 0.0 > logm[i + 1]:
            frac = logm[i] / (logm[i] - logm[i + 1])
            lf = logf[i] + frac * (logf[i + 1] - logf[i])
            crossover = 10.0 ** lf
            ph = phase[i] + frac * (phase[i + 1] - phase[i])
            pm = 180.0 + np.degrees(ph)
            # fold to a (-180, 180] margin convention
            pm = (pm + 180.0) % 360.0 - 180.0
            break
    if crossover is None:
        raise NoCrossover("loop gain never crosses unity in the scan band")

    gains = []
    for f in gain_at:
        if f is None or abs(f - comp.f_b_target) < 1e-9:
            # nearest scan point stands in for the unbounded resonant centre
            i = int(np.argmin(np.abs(scan - comp.f_b_target)))
            gains.append((float(comp.f_b_target), 20.0 * np.log10(mag[i])))
        else:
            g = -compensator_gain(comp, f) * np.sum(res / (2j * np.pi * f - lam))
            gains.append((float(f), 20.0 * float(np.log10(abs(g)))))
    return LoopMetrics(crossover_hz=float(crossover),
                       phase_margin_deg=float(pm), gain_db_at=gains)


def bode_csv_rows(freqs, gains):
    """Rows of (f_hz, gain_db, phase_deg) for CSV export."""
    phase = np.degrees(np.unwrap(np.angle(gains)))
    rows = []
    for f, g, p in zip(freqs, 20.0 * np.log10(np.abs(gains)), phase):
        rows.append((float(f), float(g), float(p)))
    return rows
