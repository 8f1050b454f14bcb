import numpy as np
import scipy.linalg
import scipy.optimize
from django.forms import ValidationError
from django.test import SimpleTestCase

from qcqp.generators import MulticastConfig, RandomQcqpConfig, complex_gaussian, gen_multicast, gen_random_qcqp
from qcqp.illustrative import FIG1_LAMBDA, Z0_STUCK, Z0_SUCCESS, fig1_instance
from qcqp.linalg import (Constraint, DimensionMismatch, HermitianMatrix, QcqpInstance, SplitConstraint,
                         check_feasibility, lift, lower, quad_form, real_embedding, split_instance,
                         surrogate_value)
from solvers.barrier import EngineParams, InfeasibleStart, Status
from solvers.forms import FppResultForm, SdrResultForm, validate_payload
from solvers.fpp import (FEASIBLE_STATUSES, FppParams, FppStatus, build_subproblem, fpp_result_to_dict,
                         kkt_check, multi_start, random_start, run_fpp_sca)
from solvers.sdp import SdpProblem, SdpSolution, rank_one_extract, solve_sdp
from solvers.sdr import (SdrParams, least_violating_draw, loss_db, randomize_and_scale, scale_intervals,
                         sdr_lower_bound, sdr_result_to_dict, solve_sdr)
from solvers.subproblem import ConvexQcqpSubproblem, QuadraticConstraint, solve_subproblem


def scalar_problem(linear, offset, start):
    """min x^2 + 10 s для y = (x, s) с одним ограничением и s >= 0."""
    return ConvexQcqpSubproblem(
        objective_quadratic=np.diag([1.0, 0.0]),
        objective_linear=np.array([0.0, 10.0]),
        constraints=(
            QuadraticConstraint(None, np.asarray(linear, dtype=float), offset),
            QuadraticConstraint(None, np.array([0.0, -1.0]), 0.0),
        ),
        start=np.asarray(start, dtype=float),
    )


def slsqp_oracle(p: ConvexQcqpSubproblem):
    constraints = []
    for constraint in p.constraints:
        quadratic = np.zeros((p.n, p.n)) if constraint.quadratic is None else constraint.quadratic
        constraints.append({
            'type': 'ineq',
            'fun': lambda y, c=constraint: -c.value(y),
            'jac': lambda y, q=quadratic, c=constraint: -(2 * q @ y + c.linear),
        })
    return scipy.optimize.minimize(
        p.objective,
        p.start,
        jac=lambda y: 2 * p.objective_quadratic @ y + p.objective_linear,
        method='SLSQP',
        constraints=constraints,
        options={'ftol': 1e-12, 'maxiter': 1000},
    )


def one_dimensional(a, bound) -> QcqpInstance:
    return QcqpInstance(HermitianMatrix.identity(1), ((HermitianMatrix(np.array([[a]])), bound),))


class SubproblemTest(SimpleTestCase):

    def test_unconstrained_minimum_is_feasible(self):
        p = ConvexQcqpSubproblem(
            objective_quadratic=np.diag([1.0, 0.0]),
            objective_linear=np.array([0.0, 10.0]),
            constraints=(
                QuadraticConstraint(np.diag([1.0, 0.0]), np.array([0.0, -1.0]), -1.0),
                QuadraticConstraint(None, np.array([0.0, -1.0]), 0.0),
            ),
            start=np.array([0.0, 1.0]),
        )
        solution = solve_subproblem(p)
        self.assertEqual(solution.status, Status.OPTIMAL)
        self.assertAlmostEqual(solution.objective_value, 0.0, delta=1e-7)
        np.testing.assert_allclose(solution.y, [0.0, 0.0], atol=1e-6)

    def test_linearized_constraint(self):
        # -2x + 1 <= -1 + s, то есть -2x - s + 2 <= 0
        solution = solve_subproblem(scalar_problem([-2.0, -1.0], 2.0, [0.0, 3.0]))
        self.assertEqual(solution.status, Status.OPTIMAL)
        self.assertAlmostEqual(solution.objective_value, 1.0, delta=1e-6)
        self.assertAlmostEqual(solution.y[0], 1.0, delta=1e-6)
        self.assertAlmostEqual(solution.y[1], 0.0, delta=1e-7)
        np.testing.assert_allclose(solution.duals, [1.0, 9.0], atol=1e-4)

    def test_infeasible_start(self):
        p = ConvexQcqpSubproblem(np.eye(1), np.zeros(1), (QuadraticConstraint(None, np.ones(1), 1.0),))
        with self.assertRaises(InfeasibleStart):
            solve_subproblem(p)

    def test_always_solvable_from_constructive_start(self):
        rng = np.random.default_rng(0)
        for seed in range(100):
            inst = gen_random_qcqp(RandomQcqpConfig(n=3, m=4, seed=seed))
            z = complex_gaussian(rng, (3,), 2.0)
            p = build_subproblem(inst, split_instance(inst), z, 10.0)
            self.assertTrue(p.is_convex())
            solution = solve_subproblem(p)
            self.assertEqual(solution.status, Status.OPTIMAL, seed)
            self.assertTrue(np.all(solution.duals >= 0))
            self.assertTrue(all(c.value(solution.y) <= 1e-8 for c in p.constraints))

    def test_n8_m16_subproblems_reach_optimal(self):
        rng = np.random.default_rng(1)
        for seed in range(20):
            inst = gen_random_qcqp(RandomQcqpConfig(n=8, m=16, seed=seed))
            z = complex_gaussian(rng, (8,), 2.0)
            solution = solve_subproblem(build_subproblem(inst, split_instance(inst), z, 10.0))
            self.assertEqual(solution.status, Status.OPTIMAL, seed)

    def test_matches_slsqp_oracle(self):
        for seed in range(20):
            inst = gen_random_qcqp(RandomQcqpConfig(n=2, m=2, seed=seed))
            p = build_subproblem(inst, split_instance(inst), random_start(2, seed), 10.0)
            oracle = slsqp_oracle(p)
            self.assertTrue(all(c.value(oracle.x) <= 1e-6 for c in p.constraints), seed)
            solution = solve_subproblem(p)
            self.assertAlmostEqual(solution.objective_value, oracle.fun, delta=1e-5 * (1 + abs(oracle.fun)), msg=seed)


class SdpTest(SimpleTestCase):

    def test_scalar_relaxation(self):
        solution = solve_sdp(SdpProblem.from_instance(one_dimensional(-1.0, -1.0)))
        self.assertEqual(solution.status, Status.OPTIMAL)
        self.assertAlmostEqual(solution.lower_bound, 1.0, delta=1e-6)
        self.assertAlmostEqual(solution.X[0, 0].real, 1.0, delta=1e-6)
        x = rank_one_extract(solution.X)
        self.assertAlmostEqual(abs(x[0]), 1.0, delta=1e-6)

    def test_bound_below_generator_point(self):
        for seed in range(5):
            inst = gen_random_qcqp(RandomQcqpConfig(n=4, m=6, seed=seed))
            solution = solve_sdp(SdpProblem.from_instance(inst))
            self.assertEqual(solution.status, Status.OPTIMAL)
            self.assertLessEqual(solution.lower_bound, quad_form(inst.a0, inst.x_init) + 1e-6 * inst.scale)
            trace = np.trace(solution.X).real
            self.assertGreaterEqual(np.linalg.eigvalsh(solution.X)[0], -1e-8 * trace)
            values = np.einsum('mij,ji->m', inst.stacked, solution.X).real
            self.assertTrue(np.all(values <= inst.bounds + 1e-7 * inst.scale))

    def test_relaxation_n8_m16_reaches_optimal(self):
        for seed in range(3):
            inst = gen_random_qcqp(RandomQcqpConfig(n=8, m=16, seed=seed))
            solution = solve_sdp(SdpProblem.from_instance(inst))
            self.assertEqual(solution.status, Status.OPTIMAL, seed)
            self.assertTrue(solution.usable)
            self.assertLessEqual(solution.gap, 1e-8 * max(1.0, abs(solution.lower_bound)))
            self.assertLessEqual(solution.lower_bound, quad_form(inst.a0, inst.x_init) + 1e-6 * inst.scale)

    def test_capped_solution_with_small_gap_is_usable(self):
        X = np.eye(2)
        capped = SdpSolution(X, 1.0, np.zeros(1), Status.MAX_ITER, gap=1e-9)
        self.assertTrue(capped.usable)
        self.assertFalse(SdpSolution(X, 1.0, np.zeros(1), Status.MAX_ITER, gap=1e-2).usable)
        self.assertFalse(SdpSolution(X, 1.0, np.zeros(1), Status.MAX_ITER).usable)
        self.assertFalse(SdpSolution(X, 1.0, np.zeros(1), Status.NUMERICAL_FAILURE, gap=1e-9).usable)

    def test_zero_constraints(self):
        inst = QcqpInstance(HermitianMatrix.identity(3), ((HermitianMatrix.zeros(3), 1.0),))
        solution = solve_sdp(SdpProblem.from_instance(inst))
        self.assertEqual(solution.status, Status.OPTIMAL)
        self.assertAlmostEqual(solution.lower_bound, 0.0, delta=1e-6)
        self.assertIsNone(solution.phase1_value)

    def test_infeasible_relaxation(self):
        # x^H x <= -1 не выполняется ни при каком X >= 0
        inst = QcqpInstance(HermitianMatrix.identity(2), ((HermitianMatrix.identity(2), -1.0),))
        solution = solve_sdp(SdpProblem.from_instance(inst))
        self.assertEqual(solution.status, Status.INFEASIBLE)
        self.assertGreater(solution.phase1_value, 0)

    def test_unitary_invariance(self):
        inst = gen_random_qcqp(RandomQcqpConfig(n=3, m=4, seed=2))
        unitary, _ = np.linalg.qr(complex_gaussian(np.random.default_rng(9), (3, 3), 2.0))
        rotated = QcqpInstance(
            HermitianMatrix(unitary.conj().T @ inst.a0.entries @ unitary),
            tuple(Constraint(HermitianMatrix(unitary.conj().T @ m.entries @ unitary), c) for m, c in inst.constraints),
        )
        first = solve_sdp(SdpProblem.from_instance(inst)).lower_bound
        second = solve_sdp(SdpProblem.from_instance(rotated)).lower_bound
        self.assertAlmostEqual(first, second, delta=1e-6 * (1 + abs(first)))

    def test_rank_one_extract(self):
        x = np.array([1 + 1j, -2, 0.5j])
        found = rank_one_extract(np.outer(x, x.conj()))
        self.assertAlmostEqual(abs(np.vdot(found, x)), np.vdot(x, x).real, places=8)
        self.assertIsNone(rank_one_extract(np.eye(3)))


class FppScaTest(SimpleTestCase):

    def test_illustrative_success(self):
        inst = fig1_instance()
        result = run_fpp_sca(inst, Z0_SUCCESS, FppParams(lam=FIG1_LAMBDA))
        self.assertIn(result.status, FEASIBLE_STATUSES)
        self.assertIsNotNone(result.iterations_to_feasibility)
        self.assertLessEqual(result.iterations_to_feasibility, 3)
        self.assertTrue(np.all(result.s_final < 1e-7))
        self.assertTrue(check_feasibility(inst, result.x_final, 1e-6).feasible)
        self.assertTrue(result.trace.is_monotone())
        self.assertEqual(result.slack_relapses, 0)

    def test_illustrative_stuck(self):
        result = run_fpp_sca(fig1_instance(), Z0_STUCK, FppParams(lam=FIG1_LAMBDA))
        self.assertEqual(result.status, FppStatus.INFEASIBLE_CONVERGED)
        self.assertFalse(result.feasible)
        self.assertIsNone(result.iterations_to_feasibility)
        self.assertGreater(result.s_final[2], 0.1)
        self.assertTrue(all(record.s[2] > 0.1 for record in result.trace))
        self.assertTrue(result.trace.is_monotone())

    def test_convex_instance(self):
        inst = QcqpInstance(HermitianMatrix.identity(2), (
            (HermitianMatrix.identity(2), 1.0),
            (HermitianMatrix(np.diag([2.0, 1.0])), 3.0),
        ))
        for z0 in ([5, -5j], [0.1, 0.2]):
            result = run_fpp_sca(inst, z0)
            # Итерации считаются с единицы: x_0 получено на первой, сходимость |f_1 - f_0| видна на второй.
            # При нумерации с нуля это итерация 1.
            self.assertEqual(result.iterations_to_convergence, 2)
            self.assertEqual(result.convergence_step, 1)
            self.assertEqual(result.iterations_to_feasibility, 1)
            self.assertEqual(result.status, FppStatus.FEASIBLE_KKT)
            np.testing.assert_allclose(result.x_final, [0, 0], atol=1e-6)
            self.assertTrue(np.all(result.s_final < 1e-7))

    def test_random_instance_invariants(self):
        for seed in range(5):
            inst = gen_random_qcqp(RandomQcqpConfig(n=4, m=6, seed=seed))
            params = FppParams()
            result = run_fpp_sca(inst, params=params, seed=seed)
            self.assertTrue(result.trace.is_monotone())
            if result.feasible:
                self.assertTrue(check_feasibility(inst, result.x_final, params.feas_tol).feasible)
                self.assertLessEqual(np.max(result.s_final), params.slack_zero_tol)
            if result.status == FppStatus.FEASIBLE_KKT:
                self.assertLessEqual(result.kkt_residual, params.kkt_tol)

    def test_n8_m16_runs(self):
        params = FppParams()
        results = []
        for seed in range(6):
            inst = gen_random_qcqp(RandomQcqpConfig(n=8, m=16, seed=seed))
            result = run_fpp_sca(inst, params=params, seed=seed)
            results.append(result)
            self.assertTrue(all(record.subproblem_status == Status.OPTIMAL for record in result.trace), seed)
            self.assertTrue(result.trace.is_monotone(), seed)
            self.assertNotEqual(result.status, FppStatus.MAX_ITER, seed)
            if result.feasible:
                self.assertTrue(check_feasibility(inst, result.x_final, params.feas_tol).feasible)
            if result.status == FppStatus.FEASIBLE_KKT:
                self.assertLessEqual(result.kkt_residual, params.kkt_tol)
        feasible = [result for result in results if result.feasible]
        self.assertGreaterEqual(len(feasible), 5)
        self.assertGreaterEqual(sum(result.status == FppStatus.FEASIBLE_KKT for result in feasible), len(feasible) // 2)

    def test_refinement_disabled(self):
        inst = gen_random_qcqp(RandomQcqpConfig(n=4, m=6, seed=3))
        result = run_fpp_sca(inst, params=FppParams(kkt_refine=0), seed=3)
        self.assertEqual(len(result.trace), result.iterations_to_convergence)
        with self.assertRaises(ValueError):
            FppParams(kkt_refine=-1)

    def test_deterministic(self):
        inst = gen_random_qcqp(RandomQcqpConfig(n=3, m=5, seed=1))
        first = run_fpp_sca(inst, seed=4)
        second = run_fpp_sca(inst, seed=4)
        np.testing.assert_array_equal(first.trace.penalized_objectives, second.trace.penalized_objectives)
        np.testing.assert_array_equal(first.x_final, second.x_final)

    def test_callback_sees_every_iterate(self):
        seen = []
        result = run_fpp_sca(fig1_instance(), Z0_SUCCESS, callback=seen.append)
        self.assertEqual([record.iteration for record in seen], list(range(1, len(result.trace) + 1)))

    def test_build_subproblem_dimension_mismatch(self):
        inst = fig1_instance()
        with self.assertRaises(DimensionMismatch):
            build_subproblem(inst, split_instance(inst)[:2], [1, 0], 10.0)

    def test_illustrative_linearization(self):
        inst = fig1_instance()
        p = build_subproblem(inst, split_instance(inst), [1, 0], 10.0)
        first = p.constraints[0]
        # -2.96 x1 + 1.36 x2 - s1 + 2.48 <= 0
        self.assertIsNone(first.quadratic)
        np.testing.assert_allclose(first.linear[[0, 1]], [-2.96, 1.36], atol=1e-12)
        np.testing.assert_allclose(first.linear[[2, 3]], [0.0, 0.0], atol=1e-12)
        self.assertEqual(first.linear[4], -1.0)
        self.assertAlmostEqual(first.offset, 2.48, places=12)

    def test_random_start_streams(self):
        np.testing.assert_array_equal(random_start(4, 3), random_start(4, 3))
        self.assertFalse(np.array_equal(random_start(4, 3), random_start(4, 3, index=1)))
        inst = gen_random_qcqp(RandomQcqpConfig(n=4, m=2, seed=3))
        self.assertFalse(np.allclose(random_start(4, 3), inst.x_init))

    def test_gradient_tangency(self):
        rng = np.random.default_rng(21)
        step = 1e-6
        for _ in range(20):
            g = complex_gaussian(rng, (3, 3), 2.0)
            matrix = HermitianMatrix((g + g.conj().T) / 2)
            sc = SplitConstraint.from_constraint(matrix, 0.0)
            z = complex_gaussian(rng, (3,), 2.0)
            base = lift(z)
            surrogate = np.zeros(6)
            true = np.zeros(6)
            for i in range(6):
                shift = np.zeros(6)
                shift[i] = step
                surrogate[i] = (surrogate_value(sc, z, lower(base + shift)) - surrogate_value(sc, z, lower(base - shift))) / (2 * step)
                true[i] = (quad_form(matrix, lower(base + shift)) - quad_form(matrix, lower(base - shift))) / (2 * step)
            analytic = 2 * real_embedding(matrix) @ base
            scale = np.linalg.norm(analytic)
            self.assertLessEqual(np.linalg.norm(surrogate - analytic), 1e-5 * scale)
            self.assertLessEqual(np.linalg.norm(true - analytic), 1e-5 * scale)


class KktTest(SimpleTestCase):

    def test_interior_optimum(self):
        inst = QcqpInstance(HermitianMatrix.identity(2), ((HermitianMatrix.identity(2), 1.0),))
        certificate = kkt_check(inst, [0, 0], [0.0])
        self.assertTrue(certificate.passed)
        self.assertEqual(certificate.residual, 0.0)
        self.assertEqual(certificate.primal_violation, 0.0)

    def test_active_reverse_constraint(self):
        # min x^2 при x^2 >= 1: x = 1, mu = 1
        certificate = kkt_check(one_dimensional(-1.0, -1.0), [1.0], [1.0])
        self.assertTrue(certificate.passed)
        self.assertAlmostEqual(certificate.stationarity_residual, 0.0, places=12)

    def test_non_stationary_point(self):
        certificate = kkt_check(fig1_instance(), [0, 1.4], np.zeros(3))
        self.assertFalse(certificate.passed)
        self.assertAlmostEqual(certificate.stationarity_residual, 1.4 / 2.4, places=12)

    def test_slack_duals_are_discarded(self):
        certificate = kkt_check(one_dimensional(-1.0, -1.0), [1.0], [1.0, 123.0])
        np.testing.assert_array_equal(certificate.multipliers, [1.0])
        self.assertTrue(certificate.passed)


class MultiStartTest(SimpleTestCase):

    def test_prefers_feasible_start(self):
        inst = fig1_instance()
        params = FppParams(lam=FIG1_LAMBDA)
        best = multi_start(inst, [Z0_STUCK, Z0_SUCCESS], params)
        self.assertTrue(best.feasible)
        self.assertEqual(best.start_index, 1)
        single = run_fpp_sca(inst, Z0_SUCCESS, params)
        np.testing.assert_array_equal(best.x_final, single.x_final)

    def test_single_and_duplicate_starts(self):
        inst = fig1_instance()
        single = run_fpp_sca(inst, Z0_STUCK)
        for starts in ([Z0_STUCK], [Z0_STUCK, Z0_STUCK]):
            best = multi_start(inst, starts)
            self.assertEqual(best.status, single.status)
            self.assertEqual(best.start_index, 0)
            np.testing.assert_array_equal(best.x_final, single.x_final)

    def test_needs_a_start(self):
        with self.assertRaises(ValueError):
            multi_start(fig1_instance(), [])


class SdrTest(SimpleTestCase):

    def test_scale_intervals(self):
        lo, hi = scale_intervals(np.array([[1.0, -1.0], [1.0, 1.0], [0.0, -1.0], [0.0, 0.0]]), np.array([2.0, -1.0]))
        np.testing.assert_allclose(lo[0], 1.0)
        np.testing.assert_allclose(hi[0], 2.0)
        self.assertGreater(lo[1], hi[1])
        self.assertEqual(lo[2], 1.0)
        self.assertEqual(hi[2], np.inf)
        self.assertGreater(lo[3], hi[3])

    def test_semidefinite_negative_constraints_always_scale(self):
        inst = gen_multicast(MulticastConfig(n=4, m=6, k=0, tau=10, eta=1, seed=2))
        found = randomize_and_scale(inst, np.eye(4), 50, rng_seed=0)
        self.assertIsNotNone(found)
        x, objective = found
        self.assertTrue(check_feasibility(inst, x).feasible)
        self.assertAlmostEqual(objective, quad_form(inst.a0, x), places=10)

    def test_rank_one_covariance(self):
        x = np.array([0.6, 0.8j])
        inst = QcqpInstance(HermitianMatrix.identity(2), ((-HermitianMatrix.identity(2), -1.0),))
        found = randomize_and_scale(inst, np.outer(x, x.conj()), 20, rng_seed=1)
        self.assertIsNotNone(found)
        point, objective = found
        self.assertAlmostEqual(objective, quad_form(inst.a0, x), delta=1e-6)
        self.assertAlmostEqual(abs(np.vdot(point, x)), np.linalg.norm(point) * np.linalg.norm(x), delta=1e-6)

    def test_no_draws(self):
        inst = fig1_instance()
        self.assertIsNone(randomize_and_scale(inst, np.eye(2), 0, rng_seed=0))
        self.assertIsNone(least_violating_draw(inst, np.eye(2), 0, seed=0))

    def test_least_violating_draw(self):
        # |x|^2 >= 4 и |x|^2 <= 1 несовместны, минимальная суммарная невязка 3
        inst = QcqpInstance(HermitianMatrix.identity(1), (
            (HermitianMatrix(np.array([[-1.0]])), -4.0),
            (HermitianMatrix(np.array([[1.0]])), 1.0),
        ))
        self.assertIsNone(randomize_and_scale(inst, np.eye(1), 10, rng_seed=0))
        best = least_violating_draw(inst, np.eye(1), 10, seed=0)
        self.assertAlmostEqual(best.violation, 3.0, places=9)
        self.assertAlmostEqual(best.objective, 1.0, places=9)
        self.assertAlmostEqual(abs(best.x[0]) ** 2, 1.0, places=9)

    def test_scalar_relaxation_is_rank_one(self):
        result = sdr_lower_bound(one_dimensional(-1.0, -1.0))
        self.assertTrue(result.sdr_feasible)
        self.assertTrue(result.rank1)
        self.assertEqual(result.source, 'rank1')
        self.assertAlmostEqual(result.best_objective, 1.0, delta=1e-6)

    def test_convex_relaxation_is_tight(self):
        inst = QcqpInstance(HermitianMatrix.identity(2), ((HermitianMatrix(np.diag([1.0, 3.0])), 2.0),))
        result = solve_sdr(inst, SdrParams(draws=10), seed=0)
        fpp = run_fpp_sca(inst, [1, 1])
        self.assertAlmostEqual(result.lower_bound, fpp.objective, delta=1e-5)

    def test_infeasible_relaxation(self):
        inst = QcqpInstance(HermitianMatrix.identity(2), ((HermitianMatrix.identity(2), -1.0),))
        result = solve_sdr(inst, SdrParams(draws=10), seed=0)
        self.assertFalse(result.sdr_feasible)
        self.assertIsNone(result.lower_bound)
        self.assertEqual(result.randomizations_tried, 0)

    def test_relaxation_dominance(self):
        for seed in range(3):
            inst = gen_random_qcqp(RandomQcqpConfig(n=4, m=8, seed=seed))
            result = solve_sdr(inst, SdrParams(draws=200), seed=seed)
            self.assertTrue(result.sdr_feasible)
            if result.best_point is not None:
                self.assertTrue(check_feasibility(inst, result.best_point).feasible)
                self.assertLessEqual(result.lower_bound, result.best_objective + 1e-6 * inst.scale)
            fpp = run_fpp_sca(inst, seed=seed)
            if fpp.feasible:
                self.assertGreaterEqual(fpp.objective, result.lower_bound - 1e-6 * inst.scale)

    def test_randomization_is_reproducible(self):
        inst = gen_random_qcqp(RandomQcqpConfig(n=4, m=8, seed=1))
        X = np.eye(4)
        found = randomize_and_scale(inst, X, 100, 5, batch=30)
        again = randomize_and_scale(inst, X, 100, 5, batch=30)
        if found is None:
            self.assertIsNone(again)
        else:
            np.testing.assert_array_equal(found[0], again[0])
        first = least_violating_draw(inst, X, 100, 5)
        second = least_violating_draw(inst, X, 100, 5)
        self.assertEqual(first.draw, second.draw)
        np.testing.assert_array_equal(first.x, second.x)

    def test_loss_db(self):
        self.assertEqual(loss_db(2.0, 2.0), 0.0)
        self.assertAlmostEqual(loss_db(2.0, 1.0), 3.0103, places=4)
        self.assertAlmostEqual(loss_db(1.242, 1.0), 0.942, delta=1e-3)
        self.assertIsNone(loss_db(1.0, 0.0))
        self.assertIsNone(loss_db(None, 1.0))


class ResultFormTest(SimpleTestCase):

    def test_fpp_payload(self):
        result = run_fpp_sca(fig1_instance(), Z0_SUCCESS)
        data = fpp_result_to_dict(result, include_trace=True)
        self.assertEqual(validate_payload(FppResultForm, data), data)
        self.assertEqual(len(data['trace']), len(result.trace))
        data['status'] = 'unknown'
        with self.assertRaises(ValidationError):
            validate_payload(FppResultForm, data)

    def test_sdr_payload(self):
        result = sdr_lower_bound(one_dimensional(-1.0, -1.0))
        data = sdr_result_to_dict(result)
        self.assertEqual(validate_payload(SdrResultForm, data), data)
        data['x'] = {'re': [1.0]}
        with self.assertRaises(ValidationError):
            validate_payload(SdrResultForm, data)

    def test_engine_params_validation(self):
        with self.assertRaises(ValueError):
            EngineParams(alpha=0.7)
        with self.assertRaises(ValueError):
            FppParams(lam=0)
