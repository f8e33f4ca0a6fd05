"""Command-line front end: config loading, analysis commands, CSV/JSON reports.

Reports are deterministic: fixed row ordering and shortest round-trip float
formatting, so repeated runs over the same config are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import beat_analysis, small_signal
from .beat_analysis import DesignSpec, design_capacitors, recommend_frequency_plan, sweep_beat
from .errors import (
    NoConvergence,
    NoCrossover,
    NoResonance,
    RationalizationFailure,
    SingularSystem,
    UnstableLoop,
    WindowMismatch,
    WptBeatError,
)
from .excitation import CircuitParams
from .small_signal import bode_csv_rows, compensator_gain, duty_to_output_response, loop_metrics
from .steady_state import SIGNALS, line_amplitude, solve_steady_state
from .time_sim import (
    CompensatorParams,
    SimConfig,
    line_amplitude_of,
    simulate,
    simulate_closed_loop,
    spectrum_of,
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2
EXIT_VERIFY_FAIL = 3

SIGNAL_UNITS = {"v_dc": "V", "i_l": "A", "v_o": "V"}

NUMERICAL_ERRORS = (SingularSystem, NoConvergence, UnstableLoop,
                    RationalizationFailure, NoCrossover, NoResonance,
                    WindowMismatch)


class ValidationError(WptBeatError):
    pass


@dataclass
class RunConfig:
    circuit: CircuitParams
    sim: SimConfig
    compensators: CompensatorParams | None
    design: DesignSpec | None
    sweep: dict
    output_dir: Path
    format: str  # csv | json | both

    @property
    def want_csv(self) -> bool:
        return self.format in ("csv", "both")

    @property
    def want_json(self) -> bool:
        return self.format in ("json", "both")


def _build_section(cls, data: dict, where: str):
    try:
        return cls(**data)
    except TypeError as exc:
        raise ValidationError(f"{where}: {exc}") from None
    except ValueError as exc:
        raise ValidationError(f"{where}: {exc}") from None


def load_config(path, overrides=None, output_dir=None, fmt=None) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ValidationError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config {path} is not valid JSON: {exc}") from None
    for dotted, value in (overrides or []):
        section, _, field = dotted.partition(".")
        if not field:
            raise ValidationError(f"override {dotted!r} is not a dotted path")
        raw.setdefault(section, {})
        if not isinstance(raw[section], dict):
            raise ValidationError(f"override {dotted!r}: {section} is not a section")
        raw[section][field] = value
    if "circuit" not in raw:
        raise ValidationError("config is missing the required 'circuit' section")
    circuit = _build_section(CircuitParams, raw["circuit"], "circuit")
    sim = _build_section(SimConfig, raw.get("sim", {}), "sim")
    comp = None
    if raw.get("compensators"):
        comp = _build_section(CompensatorParams, raw["compensators"], "compensators")
    design = None
    if raw.get("design"):
        design = _build_section(DesignSpec, raw["design"], "design")
    out = Path(output_dir or raw.get("output_dir")
               or os.environ.get("WPTBEAT_OUTPUT_DIR", "."))
    fmt = fmt or raw.get("format", "both")
    if fmt not in ("csv", "json", "both"):
        raise ValidationError(f"format must be csv, json or both, got {fmt!r}")
    return RunConfig(circuit=circuit, sim=sim, compensators=comp, design=design,
                     sweep=raw.get("sweep", {}), output_dir=out, format=fmt)


def _fmt(x) -> str:
    """Shortest round-trip decimal for floats; plain text otherwise."""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def _jsonable(obj):
    """Non-finite floats have no strict-JSON encoding; map them to null."""
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return float(obj) if np.isfinite(obj) else None
    return obj


def write_json(path: Path, payload):
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True,
                  allow_nan=False)
        fh.write("\n")


def _db_norm(amplitude: float, dc: float) -> float:
    if amplitude <= 0.0 or dc <= 0.0:
        return float("-inf")
    return 20.0 * float(np.log10(amplitude / dc))


def _harmonic_rows(vec, grid, dc: float):
    rows = []
    for k in range(-vec.k_max, vec.k_max + 1):
        c = vec[k]
        amp = abs(c) if k == 0 else 2.0 * abs(c)
        rows.append((k, k * grid.f_base, c.real, c.imag, amp, _db_norm(amp, dc)))
    return rows


def cmd_solve(cfg: RunConfig, args) -> int:
    grid = cfg.circuit.grid()
    sol = solve_steady_state(cfg.circuit, grid)
    payload = {}
    for sig in SIGNALS:
        unit = SIGNAL_UNITS[sig]
        dc = line_amplitude(sol, sig, 0)
        rows = _harmonic_rows(sol.signal(sig), grid, dc)
        if cfg.want_csv:
            write_csv(cfg.output_dir / f"solve_{sig}.csv",
                      ("k_index", "f_hz", f"re_{unit}", f"im_{unit}",
                       f"amplitude_{unit}", "amplitude_db_norm_dB"), rows)
        payload[sig] = [
            {"k": r[0], "f_hz": r[1], "re": r[2], "im": r[3],
             "amplitude": r[4], "amplitude_db_norm": r[5]} for r in rows
        ]
    payload["residual_norm"] = sol.residual_norm
    if cfg.want_json:
        write_json(cfg.output_dir / "solve.json", payload)
    return EXIT_OK


def _spectrum_reports(cfg: RunConfig, trace, grid, stem: str):
    payload = {}
    for sig in SIGNALS:
        unit = SIGNAL_UNITS[sig]
        spec = spectrum_of(trace, grid, sig)
        dc = line_amplitude_of(spec, 0)
        rows = _harmonic_rows(spec, grid, dc)
        if cfg.want_csv:
            write_csv(cfg.output_dir / f"{stem}_{sig}.csv",
                      ("k_index", "f_hz", f"re_{unit}", f"im_{unit}",
                       f"amplitude_{unit}", "amplitude_db_norm_dB"), rows)
        payload[sig] = [
            {"k": r[0], "f_hz": r[1], "amplitude": r[4],
             "amplitude_db_norm": r[5]} for r in rows
        ]
    return payload


def cmd_simulate(cfg: RunConfig, args) -> int:
    grid = cfg.circuit.grid()
    if args.closed_loop:
        if cfg.compensators is None:
            raise ValidationError(
                "--closed-loop requires a 'compensators' section in the config")
        trace = simulate_closed_loop(cfg.circuit, cfg.compensators, cfg.sim)
    else:
        trace = simulate(cfg.circuit, cfg.sim)
    trace.to_csv(cfg.output_dir / "trace.csv")
    payload = _spectrum_reports(cfg, trace, grid, "spectrum")
    if cfg.want_json:
        write_json(cfg.output_dir / "spectrum.json", payload)
    return EXIT_OK


def cmd_verify(cfg: RunConfig, args) -> int:
    """Cross-oracle check: harmonic solve vs simulated spectrum, line by line."""
    grid = cfg.circuit.grid()
    sol = solve_steady_state(cfg.circuit, grid)
    trace = simulate(cfg.circuit, cfg.sim)
    tol = args.tolerance
    rows = []
    worst = 0.0
    for sig in SIGNALS:
        spec = spectrum_of(trace, grid, sig)
        dc = line_amplitude(sol, sig, 0)
        for k in range(0, grid.k_max + 1):
            a = line_amplitude(sol, sig, k)
            if a < 0.01 * dc:
                continue
            m = line_amplitude_of(spec, k)
            rel = abs(m - a) / a
            worst = max(worst, rel)
            rows.append((sig, k, k * grid.f_base, a, m, rel,
                         "PASS" if rel <= tol else "FAIL"))
    ok = worst <= tol
    if cfg.want_csv:
        write_csv(cfg.output_dir / "verify.csv",
                  ("signal", "k_index", "f_hz", "analytic_amplitude_SI",
                   "simulated_amplitude_SI", "relative_error_frac", "status"),
                  rows)
    if cfg.want_json:
        write_json(cfg.output_dir / "verify.json", {
            "tolerance": tol,
            "worst_relative_error": worst,
            "status": "PASS" if ok else "FAIL",
            "lines": [
                {"signal": r[0], "k": r[1], "f_hz": r[2], "analytic": r[3],
                 "simulated": r[4], "relative_error": r[5], "status": r[6]}
                for r in rows
            ],
        })
    print(f"verify: {'PASS' if ok else 'FAIL'} "
          f"(worst relative error {worst:.4f}, tolerance {tol})")
    return EXIT_OK if ok else EXIT_VERIFY_FAIL


def cmd_bode(cfg: RunConfig, args) -> int:
    grid = cfg.circuit.grid()
    scan = small_signal.default_scan()
    if args.loop:
        if cfg.compensators is None:
            raise ValidationError("--loop requires a 'compensators' section")
        comp = cfg.compensators
        scan = scan[np.abs(scan - comp.f_b_target) >= 1e-9]
        resp = duty_to_output_response(cfg.circuit, grid, scan)
        gains = np.array([compensator_gain(comp, f) for f in resp.freqs]) \
            * (-resp.gains)
        metrics = loop_metrics(cfg.circuit, grid, comp,
                               gain_at=(1.0, comp.f_b_target))
        if cfg.want_json:
            write_json(cfg.output_dir / "loop_metrics.json", {
                "crossover_hz": metrics.crossover_hz,
                "phase_margin_deg": metrics.phase_margin_deg,
                "gain_db_at": [{"f_hz": f, "gain_db": g}
                               for f, g in metrics.gain_db_at],
            })
        stem = "bode_loop"
    else:
        resp = duty_to_output_response(cfg.circuit, grid, scan)
        gains = resp.gains
        stem = "bode_plant"
    rows = bode_csv_rows(resp.freqs, gains)
    if cfg.want_csv:
        write_csv(cfg.output_dir / f"{stem}.csv",
                  ("f_hz", "gain_db", "phase_deg"), rows)
    if cfg.want_json:
        write_json(cfg.output_dir / f"{stem}.json",
                   [{"f_hz": r[0], "gain_db": r[1], "phase_deg": r[2]}
                    for r in rows])
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, args) -> int:
    sweep = cfg.sweep
    f_lo = float(sweep.get("f_b_min_hz", 1000.0))
    f_hi = float(sweep.get("f_b_max_hz", cfg.circuit.f1 / 2.0))
    points = int(sweep.get("points", 200))
    overrides = [(name, values) for name, values in sweep.get("overrides", [])]
    f_bs = np.logspace(np.log10(f_lo), np.log10(f_hi), points)
    results = sweep_beat(cfg.circuit, f_bs, overrides,
                         use_full_model=args.full_model)
    rows = []
    summary = []
    for res in results:
        p = cfg.circuit.replace(**res.overrides) if res.overrides else cfg.circuit
        sol = solve_steady_state(p, p.grid())
        v_o_dc = line_amplitude(sol, "v_o", 0)
        name = ";".join(sorted(res.overrides)) if res.overrides else ""
        value = ";".join(_fmt(res.overrides[k]) for k in sorted(res.overrides)) \
            if res.overrides else ""
        for i, f_b in enumerate(res.axis):
            rows.append((f_b, name, value, res.v_dc_beat[i], res.v_o_beat[i],
                         _db_norm(res.v_o_beat[i], v_o_dc)))
        summary.append({"overrides": res.overrides, "f_cr_hz": res.f_cr,
                        "v_o_dc_V": v_o_dc,
                        "flags": sorted(set(f for f in res.flags if f))})
    if cfg.want_csv:
        write_csv(cfg.output_dir / "sweep.csv",
                  ("f_b_hz", "param_name", "param_value", "v_dc_beat_V",
                   "v_o_beat_V", "v_o_beat_norm_db"), rows)
    if cfg.want_json:
        write_json(cfg.output_dir / "sweep_summary.json",
                   {"normalization": "beat amplitude / DC component",
                    "configurations": summary})
    return EXIT_OK


def cmd_design(cfg: RunConfig, args) -> int:
    if cfg.design is None:
        raise ValidationError("design command requires a 'design' section")
    des = design_capacitors(cfg.circuit, cfg.design)
    plan = recommend_frequency_plan(cfg.circuit.f1, cfg.circuit.f2)
    payload = {
        "c_dc_min_F": des.c_dc_min,
        "c_o_min_F": des.c_o_min,
        "c_o_rule_vacuous": des.c_o_rule_vacuous,
        "frequency_plan": {
            "classification": plan.classification,
            "f1_hz": plan.f1,
            "f2_hz": plan.f2,
            "beat_frequency_hz": plan.beat_frequency,
            "remedies": plan.remedies,
        },
    }
    write_json(cfg.output_dir / "design.json", payload)
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
    "bode": cmd_bode,
    "sweep": cmd_sweep,
    "design": cmd_design,
}


def _parse_overrides(extra):
    """Turn leftover ['--circuit.f2', '200000', ...] into dotted overrides."""
    overrides = []
    i = 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--") or "." not in tok:
            raise ValidationError(f"unrecognized argument: {tok}")
        if "=" in tok:
            dotted, value = tok[2:].split("=", 1)
        else:
            if i + 1 >= len(extra):
                raise ValidationError(f"override {tok} is missing a value")
            dotted, value = tok[2:], extra[i + 1]
            i += 1
        try:
            value = json.loads(value)
        except json.JSONDecodeError:
            pass  # keep as string (booleans/numbers parse via JSON)
        overrides.append((dotted, value))
        i += 1
    return overrides


def build_parser():
    parser = argparse.ArgumentParser(
        prog="wptbeat",
        description="Beat-frequency oscillation analysis of two-stage "
                    "wireless power receivers",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("config", help="path to a JSON run configuration")
    parser.add_argument("--output-dir", default=None,
                        help="report directory (default: config value, then "
                             "$WPTBEAT_OUTPUT_DIR, then '.')")
    parser.add_argument("--format", choices=("csv", "json", "both"),
                        default=None)
    parser.add_argument("--tolerance", type=float, default=0.05,
                        help="verify: relative tolerance per spectral line")
    parser.add_argument("--closed-loop", action="store_true",
                        help="simulate: run with the feedback compensators")
    parser.add_argument("--loop", action="store_true",
                        help="bode: loop gain instead of the open-loop plant")
    parser.add_argument("--full-model", action="store_true",
                        help="sweep: use the full harmonic solve per point "
                             "where the grid rationalizes")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    try:
        overrides = _parse_overrides(extra)
        cfg = load_config(args.config, overrides,
                          output_dir=args.output_dir, fmt=args.format)
        cfg.output_dir.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
