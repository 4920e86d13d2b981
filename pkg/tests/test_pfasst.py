import numpy as np
import pytest

from heatpfasst import driver, heat, hierarchy, pfasst, sweeper
from heatpfasst.errors import ProtocolViolation
from heatpfasst.grid import StencilKind
from heatpfasst.heat import HeatProblem, exact_solution
from heatpfasst.pfasst import BlockSchedule, Mailbox, Rank, Tag, run_block

from oracles import LAM_SCALAR, ZeroForcingProblem, dense_sweep, dense_fas_tau

PROBLEM = HeatProblem()
DT = 0.375


def scalar_factory(p):
    return hierarchy.make_hierarchy(
        PROBLEM, p * DT, DT, 1, 1, 5, 3,
        StencilKind.SECOND_ORDER_7PT, StencilKind.SECOND_ORDER_7PT,
    )


def field_factory(p, nf=7, nc=3):
    return hierarchy.make_hierarchy(
        PROBLEM, p * DT, DT, nf, nc, 5, 3,
        StencilKind.FOURTH_ORDER_COMPACT, StencilKind.SECOND_ORDER_7PT,
    )


class TestMailbox:
    def test_roundtrip_copies_value(self):
        box = Mailbox()
        value = np.ones(3)
        tag = Tag("fine", 1, 0)
        box.post(tag, value)
        value[0] = 99.0
        out = box.collect(tag)
        assert np.array_equal(out, [1.0, 1.0, 1.0])

    def test_duplicate_post_rejected(self):
        box = Mailbox()
        box.post(Tag("fine", 1, 0), np.ones(1))
        with pytest.raises(ProtocolViolation):
            box.post(Tag("fine", 1, 0), np.ones(1))

    def test_terminated_sender_raises(self):
        box = Mailbox()
        box.mark_done(0)
        with pytest.raises(ProtocolViolation):
            box.collect(Tag("coarse", 3, 0))

    def test_non_blocking_miss_raises(self):
        box = Mailbox()
        with pytest.raises(ProtocolViolation):
            box.collect(Tag("fine", 1, 0), blocking=False)

    def test_timeout_raises(self):
        box = Mailbox(timeout=0.05)
        with pytest.raises(ProtocolViolation):
            box.collect(Tag("fine", 1, 0))


class TestPredictor:
    def test_single_rank_predictor_is_spread_plus_one_coarse_pass(self):
        u0 = exact_solution(0.0, 7)
        rank = Rank(0, 1, field_factory(0), Mailbox())
        rank.setup(u0)
        rank.predictor_sweep(0)
        rank.predictor_finish()

        h = field_factory(0)
        h.fine.state = sweeper.spread_initial(u0, h.fine.colloc, h.fine.ops)
        hierarchy.predictor_pass(h)
        assert all(np.array_equal(a, b) for a, b in zip(rank.h.fine.state.U, h.fine.state.U))

    def test_zero_problem_stays_zero(self):
        def zero_factory(p):
            h = field_factory(p)
            h.fine.ops = ZeroForcingProblem(PROBLEM, 7, StencilKind.SECOND_ORDER_7PT)
            h.coarse.ops = ZeroForcingProblem(PROBLEM, 3, StencilKind.SECOND_ORDER_7PT)
            return h

        result = run_block(zero_factory, np.zeros((7, 7, 7)), 3, 1e-12, 4)
        assert all(np.all(u == 0.0) for u in result.u_end)
        assert all(r == 0.0 for r in result.residuals)

    def test_two_rank_stage_schedule_matches_hand_rolled_simulation(self):
        # Scalar dense re-implementation of the staged burn-in for P = 2.
        u0 = 1.0
        mailbox = Mailbox()
        ranks = [Rank(p, 2, scalar_factory(p), mailbox) for p in range(2)]
        for r in ranks:
            r.setup(np.full((1, 1, 1), u0))
        for q in range(2):
            for p in range(q, 2):
                ranks[p].predictor_sweep(q)
            for p in range(q + 1, 2):
                ranks[p].predictor_recv(q)
        for r in ranks:
            r.predictor_finish()

        h0, h1 = scalar_factory(0), scalar_factory(1)
        cc, cf = h0.coarse.colloc, h0.fine.colloc
        node_map = np.array(h0.node_map)

        def burnin(h, u_coarse, tau):
            return dense_sweep(h.coarse.colloc, u_coarse, LAM_SCALAR, tau)

        spread = np.ones(5)
        tau0 = dense_fas_tau(cf, cc, node_map, spread)
        tau1 = dense_fas_tau(h1.fine.colloc, h1.coarse.colloc, node_map, spread)
        # stage 0: both ranks sweep from the spread state
        c0 = burnin(h0, np.ones(3), tau0)
        c1 = burnin(h1, np.ones(3), tau1)
        # rank 1 receives rank 0's end value, then sweeps once more (stage 1)
        c1[0] = c0[-1]
        c1 = burnin(h1, c1, tau1)
        # both interpolate the coarse increment (identical grids: time interp only)
        tmat = h0.tmat
        f0 = spread + tmat @ (c0 - np.ones(3))
        f1 = spread + tmat @ (c1 - np.ones(3))

        got0 = np.array([u.ravel()[0] for u in ranks[0].h.fine.state.U])
        got1 = np.array([u.ravel()[0] for u in ranks[1].h.fine.state.U])
        assert np.abs(got0 - f0).max() <= 1e-13
        assert np.abs(got1 - f1).max() <= 1e-13


class TestIterationProtocol:
    def test_single_rank_iteration_equals_mlsdc_iteration(self):
        u0 = exact_solution(0.0, 7)
        rank = Rank(0, 1, field_factory(0), Mailbox())
        rank.setup(u0)
        rank.predictor_sweep(0)
        rank.predictor_finish()
        rank.iter_fine(1)
        rank.iter_coarse(1)
        res_rank = rank.iter_update(1)

        h = field_factory(0)
        h.fine.state = sweeper.spread_initial(u0, h.fine.colloc, h.fine.ops)
        hierarchy.predictor_pass(h)
        res_ml = hierarchy.mlsdc_iteration(h)
        assert res_rank == res_ml
        assert all(np.array_equal(a, b) for a, b in zip(rank.h.fine.state.U, h.fine.state.U))

    def test_converged_block_is_fixed_point(self):
        u0 = exact_solution(0.0, 7)
        mailbox = Mailbox()
        ranks = [Rank(p, 2, field_factory(p), mailbox) for p in range(2)]
        iterations, residuals, converged = pfasst._run_sequential(ranks, u0, 1e-10, 60)
        assert converged
        k = iterations + 1
        for r in ranks:
            r.iter_fine(k)
        for r in ranks:
            r.iter_coarse(k)
        post = [r.iter_update(k) for r in ranks]
        assert max(post) <= 10.0 * 1e-10

    def test_causality_of_consumed_messages(self):
        u0 = exact_solution(0.0, 7)
        result = run_block(field_factory, u0, 3, 1e-10, 30)
        assert result.consumed[0] == []
        for p in (1, 2):
            tags = result.consumed[p]
            stages = [t for t in tags if t.level == "predictor"]
            assert stages == [Tag("predictor", q, p - 1) for q in range(p)]
            rest = [t for t in tags if t.level != "predictor"]
            # Each iteration consumes exactly (coarse, k) then (fine, k),
            # both from the left neighbour, never anything newer.
            for k in range(1, len(rest) // 2 + 1):
                assert rest[2 * k - 2] == Tag("coarse", k, p - 1)
                assert rest[2 * k - 1] == Tag("fine", k, p - 1)

    def test_sequential_and_concurrent_backends_identical_scalar(self):
        u0 = np.full((1, 1, 1), 1.0)
        res_a = run_block(scalar_factory, u0, 4, 1e-10, 60, backend="sequential")
        res_b = run_block(scalar_factory, u0, 4, 1e-10, 60, backend="concurrent")
        assert res_a.iterations == res_b.iterations
        assert res_a.residuals == res_b.residuals
        for a, b in zip(res_a.u_end, res_b.u_end):
            assert np.array_equal(a, b)

    def test_sequential_and_concurrent_backends_identical_field(self):
        u0 = exact_solution(0.0, 7)
        res_a = run_block(field_factory, u0, 3, 1e-10, 40, backend="sequential")
        res_b = run_block(field_factory, u0, 3, 1e-10, 40, backend="concurrent")
        assert res_a.iterations == res_b.iterations
        assert res_a.residuals == res_b.residuals
        for a, b in zip(res_a.u_end, res_b.u_end):
            assert np.array_equal(a, b)

    def test_unknown_backend_rejected(self):
        with pytest.raises(ValueError):
            run_block(scalar_factory, np.full((1, 1, 1), 1.0), 1, 1e-10, 5, backend="mpi")

    def test_worker_failure_propagates_from_threads(self):
        from heatpfasst.errors import SolverDiverged
        from heatpfasst.pmg import MgConfig

        def broken_factory(p):
            h = field_factory(p)
            h.fine.mg = MgConfig(omega_jacobi=2.2)  # provably divergent smoother
            h.coarse.mg = h.fine.mg
            return h

        with pytest.raises(SolverDiverged):
            run_block(broken_factory, exact_solution(0.0, 7), 3, 1e-10, 10,
                      backend="concurrent")

    def test_non_convergence_reported(self):
        u0 = exact_solution(0.0, 7)
        result = run_block(field_factory, u0, 2, 1e-14, 2)
        assert not result.converged and result.iterations == 2


class TestBlockSchedule:
    def test_one_block_when_ranks_cover_all_steps(self):
        assert BlockSchedule(32, 32).num_blocks == 1

    def test_serial_decomposition(self):
        assert BlockSchedule(32, 1).num_blocks == 32
        assert BlockSchedule(32, 8).num_blocks == 4

    def test_indivisible_rejected(self):
        with pytest.raises(ValueError):
            BlockSchedule(32, 5)


class TestDriverIntegration:
    def test_single_rank_simulation_equals_serial_mlsdc(self):
        base = dict(n_fine=7, n_coarse=3, dt=DT, t_end=1.5, tol=1e-10)
        ml = driver.run_simulation(driver.RunConfig(mode="mlsdc", **base))
        p1 = driver.run_simulation(driver.RunConfig(mode="pfasst", ranks=1, **base))
        for a, b in zip(ml.steps, p1.steps):
            assert a.iterations == b.iterations
            assert a.residual == b.residual
            assert a.rel_max_error == b.rel_max_error

    def test_errors_consistent_across_rank_counts(self):
        base = dict(n_fine=7, n_coarse=3, dt=DT, t_end=1.5, tol=1e-10)
        serial = driver.run_simulation(driver.RunConfig(mode="sdc", **base))
        for ranks in (2, 4):
            par = driver.run_simulation(driver.RunConfig(mode="pfasst", ranks=ranks, **base))
            assert par.converged
            diff = max(abs(a.rel_max_error - b.rel_max_error)
                       for a, b in zip(serial.steps, par.steps))
            assert diff <= 1e-9, (ranks, diff)

    def test_end_values_match_serial_solver_fieldwise(self):
        # Field-level agreement with time-serial SDC at every step boundary.
        ops = heat.LevelProblem(PROBLEM, 7, StencilKind.FOURTH_ORDER_COMPACT)
        u_serial = exact_solution(0.0, 7)
        serial_ends = []
        for s in range(4):
            result = sweeper.sdc_step(u_serial, s * DT, DT, 5, ops, 1e-10, 60)
            assert result.converged
            u_serial = result.u_end
            serial_ends.append(u_serial)

        u0 = exact_solution(0.0, 7)
        block = run_block(field_factory, u0, 4, 1e-10, 80)
        assert block.converged
        scale = max(float(np.abs(u).max()) for u in serial_ends)
        worst = max(float(np.abs(a - b).max()) for a, b in zip(serial_ends, block.u_end))
        assert worst / scale <= 1e-9, worst

    def test_iterations_do_not_drop_with_more_ranks(self):
        base = dict(n_fine=7, n_coarse=3, dt=DT, t_end=3.0, tol=1e-10)
        ks = [driver.run_simulation(driver.RunConfig(mode="pfasst", ranks=r, **base)).k
              for r in (1, 2, 4)]
        assert ks[0] <= ks[1] <= ks[2], ks

    def test_indivisible_step_count_rejected(self):
        cfg = driver.RunConfig(mode="pfasst", ranks=5, n_fine=7, n_coarse=3,
                               dt=DT, t_end=3.0)
        with pytest.raises(ValueError):
            driver.run_simulation(cfg)
