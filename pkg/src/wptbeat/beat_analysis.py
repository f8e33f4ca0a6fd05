"""Closed-form beat components, critical-frequency search, parameter sweeps,
and the capacitor/frequency design rules."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NoResonance, RationalizationFailure
from .excitation import CircuitParams
from .spectral import build_frequency_grid
from .steady_state import line_amplitude, solve_steady_state

NEAR_SINGULAR_RTOL = 1e-9
SEPARATION_FACTOR = 5.0


@dataclass(frozen=True)
class DesignSpec:
    """Ripple budget for the DC-link capacitor rule."""

    x_dc: float   # beat amplitude as a fraction of the DC value
    v_dc0: float  # DC-link operating point, V

    def __post_init__(self):
        if not 0.0 < self.x_dc < 1.0:
            raise ValueError("x_dc must lie in (0, 1)")
        if self.v_dc0 <= 0.0:
            raise ValueError("v_dc0 must be positive")


@dataclass(frozen=True)
class BeatComponents:
    v_dc_beat: complex      # Fourier coefficient at the beat index, V
    v_o_beat: complex       # Fourier coefficient at the beat index, V
    near_singular: bool     # denominator close to its resonance zero

    @property
    def v_dc_amplitude(self) -> float:
        """Folded real-signal amplitude (2x the coefficient magnitude)."""
        return 2.0 * abs(self.v_dc_beat)

    @property
    def v_o_amplitude(self) -> float:
        # the output numerator already carries the positive/negative-line
        # folding factor: away from resonance |v_o_beat| matches the full
        # model's folded line amplitude directly, while v_dc_beat needs 2x
        return abs(self.v_o_beat)


@dataclass
class SweepResult:
    axis: np.ndarray          # swept beat frequencies, Hz
    v_dc_beat: np.ndarray     # folded amplitudes, V
    v_o_beat: np.ndarray      # folded amplitudes, V
    f_cr: float               # critical frequency of this configuration, Hz
    overrides: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)  # per-point annotations ('' if clean)


@dataclass(frozen=True)
class CapacitorDesign:
    c_dc_min: float
    c_o_min: float
    c_o_rule_vacuous: bool  # f1 == f2: no beat frequency, the C_o rule is moot


@dataclass(frozen=True)
class FrequencyPlan:
    classification: str      # SYNCHRONIZED | SEPARATED | AT_RISK
    f1: float
    f2: float
    beat_frequency: float
    remedies: list           # for AT_RISK: the three quantitative options


def _denominator(params: CircuitParams, f_b: float) -> complex:
    d, f1, r = params.duty, params.f1, params.r_load
    c_dc, c_o, l = params.c_dc, params.c_o, params.l
    e = np.exp(2j * np.pi * d)
    pi = np.pi
    return (
        f_b
        - 2.0 * f_b * e
        + f_b * e * e
        + 2j * pi * c_o * r * f_b ** 2
        - 4.0 * d * d * f1 * pi ** 2 * e
        - 4j * pi * c_o * r * f_b ** 2 * e
        + 2j * pi * c_o * r * f_b ** 2 * e * e
        + 16.0 * c_dc * l * f1 * f_b ** 2 * pi ** 4 * e
        - 8j * c_dc * r * f1 * f_b * pi ** 3 * e
        - 8j * c_o * d * d * r * f1 * f_b * pi ** 3 * e
        + 32j * c_dc * c_o * l * r * f1 * f_b ** 3 * pi ** 5 * e
    )


def beat_component_closed_form(params: CircuitParams, f_b: float) -> BeatComponents:
    """Reduced-order beat-line coefficients of the DC-link and output voltage.

    Both share one denominator whose near-zero marks the resonance; crossing
    it sets the near_singular flag rather than raising.
    """
    if f_b <= 0:
        raise ValueError("beat frequency must be positive")
    d, i_ls, r = params.duty, params.i_ls_amplitude, params.r_load
    e = np.exp(2j * np.pi * d)
    pi = np.pi
    num_vdc = (d * i_ls * e * (1.0 + 2j * pi * params.c_o * r * f_b)
               * (e - 1.0) * 1j) / (4.0 * params.c_dc)
    num_vo = pi * i_ls * r * f_b * e * (e - 1.0)
    den = _denominator(params, f_b)
    # off-resonance scale: the same denominator one decade above
    scale = abs(_denominator(params, 10.0 * f_b)) or 1.0
    return BeatComponents(
        v_dc_beat=complex(num_vdc / den),
        v_o_beat=complex(num_vo / den),
        near_singular=bool(abs(den) < NEAR_SINGULAR_RTOL * scale),
    )


def critical_frequency(params: CircuitParams, f_lo: float = 10.0,
                       f_hi=None, scan_points: int = 400) -> float:
    """Beat frequency minimizing the closed-form denominator magnitude.

    Coarse logarithmic scan followed by golden-section refinement; raises
    NoResonance when |Den| is monotone over the band (no interior minimum).
    """
    if f_hi is None:
        f_hi = params.f1 / 2.0
    fs = np.logspace(math.log10(f_lo), math.log10(f_hi), scan_points)
    mags = np.array([abs(_denominator(params, f)) for f in fs])
    i = int(np.argmin(mags))
    if i == 0 or i == len(fs) - 1:
        raise NoResonance(
            "denominator magnitude is monotone over the scan band; "
            "no interior resonance"
        )
    # golden-section refinement on the bracketing cell
    a, b = fs[i - 1], fs[i + 1]
    gr = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - gr * (b - a)
    d_ = a + gr * (b - a)
    fc = abs(_denominator(params, c))
    fd = abs(_denominator(params, d_))
    while b - a > 1e-6 * b:
        if fc < fd:
            b, d_, fd = d_, c, fc
            c = b - gr * (b - a)
            fc = abs(_denominator(params, c))
        else:
            a, c, fc = c, d_, fd
            d_ = a + gr * (b - a)
            fd = abs(_denominator(params, d_))
    return 0.5 * (a + b)


def _full_model_beat(params: CircuitParams, f_b: float):
    """Beat-line amplitudes from the full harmonic solve with f2 = f1 - f_b."""
    f2 = params.f1 - f_b
    if f2 <= 0:
        raise RationalizationFailure(f"f_b = {f_b} Hz leaves no positive f2")
    p = params.replace(f2=f2)
    grid = build_frequency_grid(p.f1, p.f2)
    sol = solve_steady_state(p, grid)
    k = grid.beat_index
    return (line_amplitude(sol, "v_dc", k), line_amplitude(sol, "v_o", k))


def sweep_beat(params: CircuitParams, f_b_range,
               parameter_overrides=None, use_full_model: bool = False) -> list:
    """Beat amplitudes across a beat-frequency range, one SweepResult per
    override configuration.

    parameter_overrides is a list of (field name, values); configurations are
    the cross product.  With use_full_model the full harmonic solve replaces
    the closed form wherever the pair (f1, f1 - f_b) rationalizes; points
    that do not are flagged and fall back to the closed form.  Per-point
    failures never abort the sweep.
    """
    f_bs = np.asarray(list(f_b_range), dtype=float)
    if f_bs.size == 0 or np.any(f_bs <= 0):
        raise ValueError("beat-frequency range must be non-empty and positive")

    configs = [{}]
    for name, values in (parameter_overrides or []):
        configs = [dict(c, **{name: v}) for c in configs for v in values]

    results = []
    for overrides in configs:
        p = params.replace(**overrides) if overrides else params
        v_dc = np.empty(f_bs.size)
        v_o = np.empty(f_bs.size)
        flags = []
        for i, f_b in enumerate(f_bs):
            flag = ""
            if use_full_model:
                try:
                    v_dc[i], v_o[i] = _full_model_beat(p, f_b)
                    flags.append("full_model")
                    continue
                except RationalizationFailure:
                    flag = "closed_form_fallback"
            comp = beat_component_closed_form(p, f_b)
            v_dc[i] = comp.v_dc_amplitude
            v_o[i] = comp.v_o_amplitude
            if comp.near_singular:
                flag = (flag + ";" if flag else "") + "near_singular"
            flags.append(flag)
        results.append(SweepResult(axis=f_bs.copy(), v_dc_beat=v_dc,
                                   v_o_beat=v_o,
                                   f_cr=critical_frequency(p),
                                   overrides=dict(overrides), flags=flags))
    return results


def design_capacitors(params: CircuitParams, spec: DesignSpec) -> CapacitorDesign:
    """Minimum DC-link and output capacitances for the given ripple budget.

    The DC-link rule takes the worse of the two extreme charge/discharge
    cases; the output rule places the LC corner below the beat frequency.
    """
    c_dc_min = max(
        params.i_ls_amplitude / (2.0 * spec.x_dc * spec.v_dc0 * np.pi * params.f1),
        params.duty / (2.0 * spec.x_dc * params.r_load * params.f2),
    )
    f_b = abs(params.f1 - params.f2)
    if f_b == 0.0:
        return CapacitorDesign(c_dc_min=c_dc_min, c_o_min=0.0,
                               c_o_rule_vacuous=True)
    c_o_min = 1.0 / (4.0 * np.pi ** 2 * f_b ** 2 * params.l)
    return CapacitorDesign(c_dc_min=c_dc_min, c_o_min=c_o_min,
                           c_o_rule_vacuous=False)


def recommend_frequency_plan(f1: float, f2: float) -> FrequencyPlan:
    """Classify a frequency pair against the beat-oscillation design rules."""
    if f1 <= 0 or f2 <= 0:
        raise ValueError("frequencies must be positive")
    f_b = abs(f1 - f2)
    if f_b == 0.0:
        cls, remedies = "SYNCHRONIZED", []
    elif f1 > SEPARATION_FACTOR * f2 or f2 > SEPARATION_FACTOR * f1:
        cls, remedies = "SEPARATED", []
    else:
        cls = "AT_RISK"
        remedies = [
            {"action": "lower the converter frequency",
             "condition": "f2 < f1/5", "threshold_hz": f1 / SEPARATION_FACTOR},
            {"action": "raise the converter frequency",
             "condition": "f2 > 5*f1", "threshold_hz": SEPARATION_FACTOR * f1},
            {"action": "synchronize the converter to the rectifier input",
             "condition": "f2 = f1", "threshold_hz": f1},
        ]
    return FrequencyPlan(classification=cls, f1=f1, f2=f2,
                         beat_frequency=f_b, remedies=remedies)
