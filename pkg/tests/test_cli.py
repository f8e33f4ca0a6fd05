import json
from pathlib import Path

import pytest

from wptbeat.cli import (
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_VALIDATION,
    EXIT_VERIFY_FAIL,
    ValidationError,
    _parse_overrides,
    load_config,
    main,
)

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"
SEC2 = str(CONFIG_DIR / "paper_sec2.json")


def run(args):
    return main(args)


class TestLoadConfig:
    def test_bundled_configs_parse(self):
        for name in ("paper_sec2.json", "paper_sec4.json", "paper_sync.json"):
            cfg = load_config(CONFIG_DIR / name)
            assert cfg.circuit.f1 == 200e3

    def test_missing_file(self):
        with pytest.raises(ValidationError):
            load_config("/no/such/config.json")

    def test_missing_circuit_section(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text("{}")
        with pytest.raises(ValidationError):
            load_config(p)

    def test_unknown_field_rejected(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps({"circuit": {"bogus": 1}}))
        with pytest.raises(ValidationError):
            load_config(p)

    def test_dotted_override_applies(self):
        cfg = load_config(SEC2, overrides=[("circuit.f2", 182000.0)])
        assert cfg.circuit.f2 == 182000.0

    def test_bad_override_path(self):
        with pytest.raises(ValidationError):
            load_config(SEC2, overrides=[("f2", 1.0)])


class TestParseOverrides:
    def test_equals_and_space_forms(self):
        assert _parse_overrides(["--circuit.f2=200000"]) == [("circuit.f2", 200000)]
        assert _parse_overrides(["--sim.ccm_assumption", "false"]) == [
            ("sim.ccm_assumption", False)]

    def test_unknown_plain_flag_rejected(self):
        with pytest.raises(ValidationError):
            _parse_overrides(["--bogus"])

    def test_missing_value_rejected(self):
        with pytest.raises(ValidationError):
            _parse_overrides(["--circuit.f2"])


class TestCommands:
    def test_solve_writes_reports(self, tmp_path):
        assert run(["solve", SEC2, "--output-dir", str(tmp_path)]) == EXIT_OK
        for sig in ("v_dc", "i_l", "v_o"):
            assert (tmp_path / f"solve_{sig}.csv").exists()
        data = json.loads((tmp_path / "solve.json").read_text())
        dc = next(r for r in data["v_o"] if r["k"] == 0)
        assert dc["amplitude"] == pytest.approx(5.3232, rel=1e-3)

    def test_solve_csv_headers_carry_units(self, tmp_path):
        run(["solve", SEC2, "--output-dir", str(tmp_path)])
        header = (tmp_path / "solve_i_l.csv").read_text().splitlines()[0]
        assert header == "k_index,f_hz,re_A,im_A,amplitude_A,amplitude_db_norm_dB"

    def test_reports_are_byte_identical_across_runs(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        run(["solve", SEC2, "--output-dir", str(a)])
        run(["solve", SEC2, "--output-dir", str(b)])
        for f in sorted(p.name for p in a.iterdir()):
            assert (a / f).read_bytes() == (b / f).read_bytes()

    def test_simulate_trace_header(self, tmp_path):
        assert run(["simulate", SEC2, "--output-dir", str(tmp_path),
                    "--format", "csv"]) == EXIT_OK
        head = (tmp_path / "trace.csv").read_text().splitlines()[0]
        assert head == "t_s,v_dc_V,i_l_A,v_o_V,i_r_A,s_sw"

    def test_verify_passes_on_bundled_config(self, tmp_path, capsys):
        assert run(["verify", SEC2, "--output-dir", str(tmp_path)]) == EXIT_OK
        assert "PASS" in capsys.readouterr().out
        report = json.loads((tmp_path / "verify.json").read_text())
        assert report["status"] == "PASS"
        assert report["worst_relative_error"] < 0.05

    def test_verify_fails_with_impossible_tolerance(self, tmp_path, capsys):
        code = run(["verify", SEC2, "--output-dir", str(tmp_path),
                    "--tolerance", "1e-9"])
        assert code == EXIT_VERIFY_FAIL
        assert "FAIL" in capsys.readouterr().out

    def test_bode_plant_csv(self, tmp_path):
        assert run(["bode", SEC2, "--output-dir", str(tmp_path),
                    "--format", "csv"]) == EXIT_OK
        lines = (tmp_path / "bode_plant.csv").read_text().splitlines()
        assert lines[0] == "f_hz,gain_db,phase_deg"
        assert len(lines) > 100

    def test_bode_loop_metrics(self, tmp_path):
        assert run(["bode", SEC2, "--loop", "--output-dir", str(tmp_path)]) == EXIT_OK
        m = json.loads((tmp_path / "loop_metrics.json").read_text())
        assert m["crossover_hz"] == pytest.approx(1000.0, rel=0.10)
        assert m["phase_margin_deg"] == pytest.approx(96.0, abs=5.0)

    def test_sweep_csv_schema(self, tmp_path):
        assert run(["sweep", SEC2, "--output-dir", str(tmp_path)]) == EXIT_OK
        lines = (tmp_path / "sweep.csv").read_text().splitlines()
        assert lines[0] == ("f_b_hz,param_name,param_value,v_dc_beat_V,"
                            "v_o_beat_V,v_o_beat_norm_db")
        summary = json.loads((tmp_path / "sweep_summary.json").read_text())
        assert summary["configurations"][0]["f_cr_hz"] == pytest.approx(
            14591.0, rel=1e-3)

    def test_design_reference_values(self, tmp_path):
        assert run(["design", SEC2, "--output-dir", str(tmp_path)]) == EXIT_OK
        d = json.loads((tmp_path / "design.json").read_text())
        assert d["c_dc_min_F"] == pytest.approx(4.50e-6, rel=0.005)
        assert d["c_o_min_F"] == pytest.approx(3.41e-6, rel=0.005)
        assert d["frequency_plan"]["classification"] == "AT_RISK"

    def test_design_sync_config_is_vacuous(self, tmp_path):
        assert run(["design", str(CONFIG_DIR / "paper_sync.json"),
                    "--output-dir", str(tmp_path)]) == EXIT_OK
        d = json.loads((tmp_path / "design.json").read_text())
        assert d["c_o_rule_vacuous"] is True
        assert d["frequency_plan"]["classification"] == "SYNCHRONIZED"


class TestExitCodes:
    def test_validation_error_is_one(self, tmp_path, capsys):
        assert run(["solve", "/no/such.json"]) == EXIT_VALIDATION
        assert "error:" in capsys.readouterr().err

    def test_numerical_error_is_two(self, tmp_path, capsys):
        code = run(["solve", SEC2, "--output-dir", str(tmp_path),
                    "--circuit.f2=185001"])
        assert code == EXIT_NUMERICAL
        assert "numerical failure" in capsys.readouterr().err

    def test_closed_loop_without_compensators_is_one(self, tmp_path):
        code = run(["simulate", str(CONFIG_DIR / "paper_sync.json"),
                    "--closed-loop", "--output-dir", str(tmp_path)])
        assert code == EXIT_VALIDATION

    def test_bad_field_value_is_one(self, tmp_path):
        code = run(["solve", SEC2, "--output-dir", str(tmp_path),
                    "--circuit.duty=2.0"])
        assert code == EXIT_VALIDATION
