import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from qcqp.generators import (GeneratorSpecError, MulticastConfig, RandomQcqpConfig, complex_gaussian,
                             gen_multicast, gen_random_qcqp, generate, parse_generator_spec)
from qcqp.illustrative import A1, A3, Z0_STUCK, Z0_SUCCESS, fig1_instance
from qcqp.linalg import (Constraint, DimensionMismatch, HermitianMatrix, NonFiniteInput, NotHermitian,
                         NotSemidefinite, QcqpInstance, SplitConstraint, check_feasibility, lift, lower,
                         quad_form, real_embedding, split_hermitian, surrogate_value)
from qcqp.serializers import SchemaError, dump_instance, instance_from_dict, instance_to_dict, load_instance


def random_hermitian(rng, n):
    g = complex_gaussian(rng, (n, n), 2.0)
    return HermitianMatrix((g + g.conj().T) / 2)


class HermitianMatrixTest(SimpleTestCase):

    def test_symmetrized_on_construction(self):
        matrix = HermitianMatrix(np.array([[1 + 1j, 2], [0, 3]]))
        np.testing.assert_allclose(matrix.entries, matrix.entries.conj().T, atol=1e-12)
        self.assertEqual(matrix.entries[0, 0].imag, 0.0)

    def test_strict_parser_rejects_non_hermitian(self):
        with self.assertRaises(NotHermitian):
            HermitianMatrix.from_array([[1, 2], [0, 3]], strict=True)
        HermitianMatrix.from_array([[1, 2 + 1j], [2 - 1j, 3]], strict=True)

    def test_rejects_bad_shapes_and_values(self):
        with self.assertRaises(DimensionMismatch):
            HermitianMatrix(np.zeros((2, 3)))
        with self.assertRaises(NonFiniteInput):
            HermitianMatrix(np.array([[np.nan]]))

    def test_entries_are_read_only(self):
        matrix = HermitianMatrix.identity(2)
        with self.assertRaises(ValueError):
            matrix.entries[0, 0] = 5


class QuadFormTest(SimpleTestCase):

    def test_identity(self):
        self.assertAlmostEqual(quad_form(HermitianMatrix.identity(2), [0, 1.4]), 1.96, places=12)

    def test_illustrative_matrix(self):
        self.assertAlmostEqual(quad_form(HermitianMatrix(A1), [0, 1.4]), -1.0192, places=12)

    def test_zero_vector(self):
        rng = np.random.default_rng(3)
        self.assertEqual(quad_form(random_hermitian(rng, 4), np.zeros(4)), 0.0)

    def test_dimension_mismatch(self):
        with self.assertRaises(DimensionMismatch):
            quad_form(HermitianMatrix.identity(2), [1, 2, 3])


class SplitTest(SimpleTestCase):

    def test_identity(self):
        plus, minus = split_hermitian(HermitianMatrix.identity(3))
        np.testing.assert_allclose(plus.entries, np.eye(3), atol=1e-12)
        self.assertTrue(minus.is_zero)

    def test_negative_definite(self):
        plus, minus = split_hermitian(HermitianMatrix(A1))
        self.assertTrue(plus.is_zero)
        np.testing.assert_allclose(minus.entries, A1, atol=1e-12)

    def test_positive_definite(self):
        plus, minus = split_hermitian(HermitianMatrix(A3))
        np.testing.assert_allclose(plus.entries, A3, atol=1e-12)
        self.assertTrue(minus.is_zero)

    def test_reconstruction_and_signs(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            matrix = random_hermitian(rng, 5)
            plus, minus = split_hermitian(matrix)
            np.testing.assert_allclose((plus + minus).entries, matrix.entries, atol=1e-10 * matrix.norm)
            self.assertGreaterEqual(plus.eigenvalues[0], -1e-9 * matrix.norm)
            self.assertLessEqual(minus.eigenvalues[-1], 1e-9 * matrix.norm)


class SurrogateTest(SimpleTestCase):

    def test_tangent_at_expansion_point(self):
        rng = np.random.default_rng(5)
        matrix = random_hermitian(rng, 4)
        z = complex_gaussian(rng, (4,), 2.0)
        sc = SplitConstraint.from_constraint(matrix, 0.0)
        self.assertAlmostEqual(surrogate_value(sc, z, z), quad_form(matrix, z), delta=1e-10)

    def test_illustrative_linearization(self):
        sc = SplitConstraint.from_constraint(HermitianMatrix(A1), -1.0)
        self.assertAlmostEqual(surrogate_value(sc, [1, 0], [0, 1]), 2.84, places=10)
        self.assertAlmostEqual(quad_form(HermitianMatrix(A1), [0, 1]), -0.52, places=12)

    def test_zero_matrix(self):
        sc = SplitConstraint.from_constraint(HermitianMatrix.zeros(2), 1.0)
        self.assertEqual(surrogate_value(sc, [1j, 2], [3, -1]), 0.0)

    def test_majorization(self):
        rng = np.random.default_rng(2013)
        for _ in range(100):
            n = int(rng.integers(1, 6))
            matrix = random_hermitian(rng, n)
            sc = SplitConstraint.from_constraint(matrix, 0.0)
            scale = max(1.0, matrix.norm)
            for _ in range(100):
                z = complex_gaussian(rng, (n,), 2.0)
                x = complex_gaussian(rng, (n,), 2.0)
                self.assertGreaterEqual(surrogate_value(sc, z, x), quad_form(matrix, x) - 1e-8 * scale)

    def test_restriction_soundness(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            matrix = random_hermitian(rng, 3)
            sc = SplitConstraint.from_constraint(matrix, 0.0)
            z = complex_gaussian(rng, (3,), 2.0)
            x = complex_gaussian(rng, (3,), 2.0)
            bound = surrogate_value(sc, z, x) + abs(rng.standard_normal())
            self.assertLessEqual(quad_form(matrix, x), bound + 1e-8 * max(1.0, matrix.norm))


class FeasibilityTest(SimpleTestCase):

    def test_illustrative_feasible_point(self):
        result = check_feasibility(fig1_instance(), [0, 1.4])
        self.assertTrue(result.feasible)
        np.testing.assert_array_equal(result.violations, np.zeros(3))

    def test_origin_is_infeasible(self):
        result = check_feasibility(fig1_instance(), [0, 0])
        self.assertFalse(result.feasible)
        np.testing.assert_allclose(result.violations, [1, 1, 0])
        self.assertEqual(result.max_violation, 1.0)
        self.assertEqual(result.total_violation, 2.0)

    def test_origin_feasible_with_nonnegative_bounds(self):
        rng = np.random.default_rng(1)
        constraints = tuple(Constraint(random_hermitian(rng, 3), abs(rng.standard_normal())) for _ in range(4))
        inst = QcqpInstance(HermitianMatrix.identity(3), constraints)
        self.assertTrue(check_feasibility(inst, np.zeros(3), 0.0).feasible)

    def test_negative_tolerance(self):
        with self.assertRaises(ValueError):
            check_feasibility(fig1_instance(), [0, 0], -1.0)


class InstanceTest(SimpleTestCase):

    def test_objective_must_be_semidefinite(self):
        with self.assertRaises(NotSemidefinite):
            QcqpInstance(HermitianMatrix(A1), ((HermitianMatrix.identity(2), 1.0),))

    def test_needs_constraints(self):
        with self.assertRaises(DimensionMismatch):
            QcqpInstance(HermitianMatrix.identity(2), ())

    def test_dimensions_agree(self):
        with self.assertRaises(DimensionMismatch):
            QcqpInstance(HermitianMatrix.identity(2), ((HermitianMatrix.identity(3), 1.0),))

    def test_illustrative_instance(self):
        inst = fig1_instance()
        self.assertEqual((inst.n, inst.m), (2, 3))
        self.assertFalse(inst.is_convex)
        # Обе фиксированные начальные точки выполняют первые два ограничения и нарушают третье
        for z0 in (Z0_SUCCESS, Z0_STUCK):
            violations = check_feasibility(inst, z0).violations
            self.assertEqual(violations[0], 0.0)
            self.assertEqual(violations[1], 0.0)
            self.assertGreater(violations[2], 0.0)


class EmbeddingTest(SimpleTestCase):

    def test_real_matrix_is_block_diagonal(self):
        embedded = real_embedding(HermitianMatrix(A3))
        np.testing.assert_allclose(embedded, np.block([[A3, np.zeros((2, 2))], [np.zeros((2, 2)), A3]]))

    def test_imaginary_off_diagonal(self):
        matrix = HermitianMatrix(np.array([[0, 1j], [-1j, 0]]))
        expected = np.array([[0, 0, 0, -1], [0, 0, 1, 0], [0, 1, 0, 0], [-1, 0, 0, 0]], dtype=float)
        np.testing.assert_allclose(real_embedding(matrix), expected)
        x = np.array([1 + 2j, -0.5 + 1j])
        self.assertAlmostEqual(lift(x) @ real_embedding(matrix) @ lift(x), quad_form(matrix, x), places=12)

    def test_quadratic_form_and_spectrum(self):
        rng = np.random.default_rng(17)
        for _ in range(20):
            matrix = random_hermitian(rng, 4)
            x = complex_gaussian(rng, (4,), 2.0)
            embedded = real_embedding(matrix)
            self.assertAlmostEqual(lift(x) @ embedded @ lift(x), quad_form(matrix, x), delta=1e-10 * (1 + matrix.norm))
            np.testing.assert_allclose(np.linalg.eigvalsh(embedded), np.repeat(matrix.eigenvalues, 2), atol=1e-10)

    def test_lift_lower(self):
        x = np.array([1 - 1j, 2j, 3])
        np.testing.assert_array_equal(lower(lift(x)), x)


class GeneratorTest(SimpleTestCase):

    def test_initial_point_is_feasible(self):
        for seed in range(1000):
            inst = gen_random_qcqp(RandomQcqpConfig(n=8, m=16, seed=seed))
            self.assertTrue(check_feasibility(inst, inst.x_init, 1e-9).feasible, seed)

    def test_deterministic(self):
        first = gen_random_qcqp(RandomQcqpConfig(n=4, m=5, seed=42))
        second = gen_random_qcqp(RandomQcqpConfig(n=4, m=5, seed=42))
        np.testing.assert_array_equal(first.stacked, second.stacked)
        np.testing.assert_array_equal(first.bounds, second.bounds)
        np.testing.assert_array_equal(first.x_init, second.x_init)
        third = gen_random_qcqp(RandomQcqpConfig(n=4, m=5, seed=43))
        self.assertFalse(np.array_equal(first.stacked, third.stacked))

    def test_objective_is_identity(self):
        inst = gen_random_qcqp(RandomQcqpConfig(n=8, m=16, seed=0))
        np.testing.assert_array_equal(inst.a0.entries, np.eye(8))
        self.assertEqual(inst.metadata['generator'], 'random')

    def test_entry_variance(self):
        rng = np.random.default_rng(0)
        samples = complex_gaussian(rng, (10000,), 2.0)
        self.assertAlmostEqual(np.mean(np.abs(samples) ** 2), 2.0, delta=0.2)
        # После симметризации (G + G^H) / 2 внедиагональные элементы имеют дисперсию entry_variance / 2
        inst = gen_random_qcqp(RandomQcqpConfig(n=10, m=120, seed=3))
        off_diagonal = inst.stacked[:, ~np.eye(10, dtype=bool)]
        self.assertAlmostEqual(np.mean(np.abs(off_diagonal) ** 2), 1.0, delta=0.1)

    def test_multicast_structure(self):
        inst = gen_multicast(MulticastConfig(n=8, m=12, k=4, tau=10, eta=1, seed=1))
        self.assertEqual(inst.m, 16)
        for matrix, bound in inst.constraints[:12]:
            self.assertTrue(matrix.is_nsd())
            self.assertEqual(np.linalg.matrix_rank(matrix.entries), 1)
            self.assertEqual(bound, -10.0)
        for matrix, bound in inst.constraints[12:]:
            self.assertTrue(matrix.is_psd())
            self.assertEqual(bound, 1.0)
        violations = check_feasibility(inst, np.zeros(8)).violations
        self.assertTrue(np.all(violations[:12] == 10.0))
        self.assertTrue(np.all(violations[12:] == 0.0))


class GeneratorSpecTest(SimpleTestCase):

    def test_random_spec(self):
        cfg = parse_generator_spec('random:n=8,M=16,seed=42')
        self.assertEqual(cfg, RandomQcqpConfig(n=8, m=16, seed=42))
        self.assertEqual(parse_generator_spec(cfg.spec), cfg)

    def test_multicast_spec(self):
        cfg = parse_generator_spec('multicast:n=8,M=12,K=4,tau=10,eta=1,seed=7')
        self.assertEqual(cfg, MulticastConfig(n=8, m=12, k=4, tau=10.0, eta=1.0, seed=7))

    def test_explicit_seed_wins(self):
        self.assertEqual(parse_generator_spec('random:n=2,M=3,seed=1', seed=9).seed, 9)
        inst = generate(RandomQcqpConfig(n=2, m=3), seed=5)
        self.assertEqual(inst.metadata['seed'], 5)

    def test_malformed(self):
        for spec in ('random:n=8', 'lattice:n=8,M=2', 'random:n=8,M=16,bogus=1', 'random:n=8,M',
                     'random:n=0,M=3', 'multicast:n=8,M=12,K=4,tau=-1,eta=1'):
            with self.subTest(spec=spec), self.assertRaises(GeneratorSpecError):
                parse_generator_spec(spec)


class SerializerTest(SimpleTestCase):

    def test_round_trip(self):
        inst = gen_random_qcqp(RandomQcqpConfig(n=3, m=4, seed=8))
        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / 'problem.json'
            dump_instance(inst, path)
            loaded = load_instance(path)
        np.testing.assert_allclose(loaded.a0.entries, inst.a0.entries)
        np.testing.assert_allclose(loaded.stacked, inst.stacked, atol=1e-12)
        np.testing.assert_allclose(loaded.bounds, inst.bounds)
        np.testing.assert_allclose(loaded.x_init, inst.x_init)

    def test_rejects_non_hermitian(self):
        data = instance_to_dict(fig1_instance())
        data['A0'][0][1] = {'re': 0.5, 'im': 0.0}
        with self.assertRaises(SchemaError):
            instance_from_dict(data)

    def test_rejects_missing_fields(self):
        with self.assertRaises(SchemaError):
            instance_from_dict({'n': 2, 'A0': [[{'re': 1}, {'re': 0}], [{'re': 0}, {'re': 1}]]})
        with self.assertRaises(SchemaError):
            instance_from_dict([])

    def test_rejects_invalid_json(self):
        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / 'broken.json'
            path.write_text('{"n": 2,', encoding='utf-8')
            with self.assertRaises(SchemaError):
                load_instance(path)
