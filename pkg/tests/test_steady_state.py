import numpy as np
import pytest

from conftest import mean_product
from wptbeat.errors import IndexOutOfGrid
from wptbeat.excitation import rectified_current_spectrum
from wptbeat.spectral import evaluate_waveform
from wptbeat.steady_state import assemble_system, line_amplitude, solve_steady_state


class TestAssembleSystem:
    def test_block_shape(self, params, grid):
        a, b = assemble_system(params, grid)
        n = 3 * (2 * grid.k_max + 1)
        assert a.shape == (n, n) and b.shape == (n,)

    def test_eigenvalues_have_nonpositive_real_parts(self, params, grid):
        # the circuit is passive: every mode decays or is neutral
        a, _ = assemble_system(params, grid)
        assert np.max(np.linalg.eigvals(a).real) <= 1e-6


class TestSolveSteadyState:
    def test_residual_is_negligible(self, solution):
        assert solution.residual_norm < 1e-10

    def test_dc_operating_point(self, solution):
        # frozen outputs of this solver at the reference bench parameters
        assert line_amplitude(solution, "v_dc", 0) == pytest.approx(10.598, rel=1e-3)
        assert line_amplitude(solution, "v_o", 0) == pytest.approx(5.3232, rel=1e-3)

    def test_all_signals_conjugate_symmetric(self, solution):
        for sig in ("v_dc", "i_l", "v_o"):
            assert solution.signal(sig).is_conjugate_symmetric()

    def test_beat_line_is_dominant_ac_content(self, solution, grid):
        k_b = grid.beat_index
        beat = line_amplitude(solution, "v_o", k_b)
        others = [line_amplitude(solution, "v_o", k)
                  for k in range(1, grid.k_max + 1) if k != k_b]
        assert beat > max(others)

    def test_power_balance_within_one_percent(self, params, grid, solution):
        # lossless circuit: source power into the DC link equals load power
        i_r = rectified_current_spectrum(params, grid)
        p_in = mean_product(solution.v_dc, i_r)
        p_out = mean_product(solution.v_o, solution.v_o) / params.r_load
        assert p_out == pytest.approx(p_in, rel=0.01)

    def test_ode_residual_in_time_domain(self, params, grid, solution):
        # independent check of the output mesh: C_o dv_o/dt = i_L - v_o/R,
        # evaluated pointwise from the reconstructed waveforms
        t = np.linspace(0.0, 1.0 / grid.f_base, 601, endpoint=False)
        h = 1e-12
        v_o = evaluate_waveform(solution.v_o, t)
        dv = (evaluate_waveform(solution.v_o, t + h)
              - evaluate_waveform(solution.v_o, t - h)) / (2 * h)
        i_l = evaluate_waveform(solution.i_l, t)
        lhs = params.c_o * dv
        rhs = i_l - v_o / params.r_load
        assert np.allclose(lhs, rhs, atol=1e-4 * np.max(np.abs(rhs)))

    def test_switch_phase_shifts_beat_phase_not_magnitude(self, params, grid):
        base = solve_steady_state(params, grid)
        shifted = solve_steady_state(params, grid, switch_phase=0.25)
        k = grid.beat_index
        assert abs(shifted.v_o[k]) == pytest.approx(abs(base.v_o[k]), rel=1e-6)
        assert shifted.v_o[k] != pytest.approx(base.v_o[k])

    def test_unknown_signal_rejected(self, solution):
        with pytest.raises(ValueError):
            solution.signal("i_r")


class TestLineAmplitude:
    def test_dc_is_unfolded(self, solution):
        assert line_amplitude(solution, "v_o", 0) == abs(solution.v_o[0])

    def test_ac_is_folded(self, solution, grid):
        k = grid.beat_index
        assert line_amplitude(solution, "v_o", k) == 2 * abs(solution.v_o[k])

    def test_out_of_grid_raises(self, solution, grid):
        with pytest.raises(IndexOutOfGrid):
            line_amplitude(solution, "v_o", grid.k_max + 1)
