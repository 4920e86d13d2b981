import numpy as np
import pytest

from heatpfasst.errors import SolverDiverged
from heatpfasst.grid import StencilKind, apply_a, apply_b
from heatpfasst.pmg import MgConfig, solve_implicit
from heatpfasst.quadrature import build_collocation, lobatto_nodes

from oracles import NU, sine_mode, stencil_eigenvalue

# Largest substep of the 5-node rule on the production step size.
LAM_OPERATING = NU * float(
    build_collocation(lobatto_nodes(5, 0.0, 0.1875)).dtau.max()
)


class TestClosedFormSolutions:
    def test_identity_system(self):
        rng = np.random.default_rng(0)
        rhs = rng.standard_normal((7, 7, 7))
        report = solve_implicit(0.0, rhs, StencilKind.SECOND_ORDER_7PT)
        assert np.array_equal(report.u, rhs)

    def test_zero_rhs_short_circuits(self):
        report = solve_implicit(0.5, np.zeros((7, 7, 7)), StencilKind.SECOND_ORDER_7PT)
        assert report.cycles == 0 and np.all(report.u == 0.0) and report.residual == 0.0

    @pytest.mark.parametrize("kind", StencilKind)
    def test_eigenmode_solution(self, kind):
        lam = 0.02
        rhs = sine_mode(15, 2, 3, 1)
        mu = stencil_eigenvalue(15, 2, 3, 1, kind)
        report = solve_implicit(lam, rhs, kind)
        expected = rhs / (1.0 - lam * mu)
        assert np.abs(report.u - expected).max() <= 1e-11 * np.abs(expected).max()

    def test_single_unknown_closed_form(self):
        report = solve_implicit(0.1, np.full((1, 1, 1), 1.0), StencilKind.SECOND_ORDER_7PT)
        assert report.u.ravel()[0] == pytest.approx(1.0 / 3.4, rel=1e-15)


class TestConvergence:
    @pytest.mark.parametrize("kind", StencilKind)
    def test_contraction_and_cycle_budget(self, kind):
        rng = np.random.default_rng(1)
        rhs = rng.standard_normal((31, 31, 31))
        report = solve_implicit(LAM_OPERATING, rhs, kind)
        assert report.converged and report.residual <= 1e-12
        assert report.cycles <= 12
        ratios = [b / a for a, b in zip(report.history[2:], report.history[3:])]
        assert max(ratios) <= 0.2, (kind, ratios)

    def test_cycles_do_not_grow_as_system_approaches_identity(self):
        rng = np.random.default_rng(2)
        rhs = rng.standard_normal((15, 15, 15))
        cycles = []
        for lam in (0.05, 0.01, 1e-3, 1e-6, 0.0):
            cycles.append(solve_implicit(lam, rhs, StencilKind.SECOND_ORDER_7PT).cycles)
        assert all(a >= b for a, b in zip(cycles, cycles[1:])), cycles

    def test_compact_pair_residual_contract(self):
        rng = np.random.default_rng(3)
        rhs = rng.standard_normal((15, 15, 15))
        lam = LAM_OPERATING
        report = solve_implicit(lam, rhs, StencilKind.FOURTH_ORDER_COMPACT)
        b = apply_b(rhs)
        lhs = apply_b(report.u) - lam * apply_a(report.u)
        assert np.abs(lhs - b).max() <= 1e-12 * np.abs(b).max()

    def test_report_flags_non_convergence(self):
        rng = np.random.default_rng(4)
        rhs = rng.standard_normal((15, 15, 15))
        cfg = MgConfig(max_cycles=2, tol=1e-14)
        report = solve_implicit(LAM_OPERATING, rhs, StencilKind.FOURTH_ORDER_COMPACT, cfg)
        assert not report.converged and report.cycles == 2


class TestErrorPaths:
    def test_divergent_smoother_detected(self):
        rng = np.random.default_rng(5)
        rhs = rng.standard_normal((15, 15, 15))
        cfg = MgConfig(omega_jacobi=2.2)
        with pytest.raises(SolverDiverged):
            solve_implicit(LAM_OPERATING, rhs, StencilKind.FOURTH_ORDER_COMPACT, cfg)

    def test_negative_lambda_rejected(self):
        with pytest.raises(ValueError):
            solve_implicit(-0.1, np.ones((7, 7, 7)), StencilKind.SECOND_ORDER_7PT)

    def test_invalid_grid_size_rejected(self):
        with pytest.raises(ValueError):
            solve_implicit(0.1, np.ones((8, 8, 8)), StencilKind.SECOND_ORDER_7PT)

    def test_non_finite_rhs_rejected(self):
        rhs = np.ones((7, 7, 7))
        rhs[3, 3, 3] = np.nan
        with pytest.raises(ValueError):
            solve_implicit(0.1, rhs, StencilKind.SECOND_ORDER_7PT)

    def test_bad_config_rejected(self):
        with pytest.raises(ValueError):
            MgConfig(tol=0.0)
        with pytest.raises(ValueError):
            MgConfig(coarsest_n=2)


def test_coarser_direct_level_gives_same_solution():
    rng = np.random.default_rng(6)
    rhs = rng.standard_normal((15, 15, 15))
    lam = 0.01
    u_deep = solve_implicit(lam, rhs, StencilKind.SECOND_ORDER_7PT).u
    u_shallow = solve_implicit(
        lam, rhs, StencilKind.SECOND_ORDER_7PT, MgConfig(coarsest_n=3)
    ).u
    assert np.abs(u_deep - u_shallow).max() <= 1e-11 * np.abs(u_deep).max()
