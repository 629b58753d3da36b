import math

import numpy as np
from django.test import SimpleTestCase, override_settings
from scipy import stats

from distributions.empirical import Sample
from longevity_bounds.exceptions import InvalidInputError
from .rng import CHUNK_SIZE, Seed, draw_chunked, stream_id
from .sampling import (
    CopulaKind,
    CopulaSpec,
    PairedSample,
    difference,
    extreme_transform,
    rank_reorder,
    reorder,
    sample_copula,
)

SEED = Seed(2010)


class SeedTests(SimpleTestCase):
    def test_accepts_unsigned_64_bit_range(self):
        self.assertEqual(Seed(0).value, 0)
        self.assertEqual(Seed(2 ** 64 - 1).value, 2 ** 64 - 1)

    def test_rejects_invalid_values(self):
        for value in (-1, 2 ** 64, 1.5, True, '12'):
            with self.assertRaises(InvalidInputError):
                Seed(value)

    def test_streams_are_stable_and_distinct(self):
        self.assertEqual(stream_id('gaussian_0.5'), stream_id('gaussian_0.5'))
        self.assertNotEqual(stream_id('gaussian_0.5'), stream_id('gaussian_-0.5'))
        a = SEED.generator('population1').random(5)
        b = SEED.generator('population1').random(5)
        c = SEED.generator('population2').random(5)
        np.testing.assert_array_equal(a, b)
        self.assertFalse(np.array_equal(a, c))

    def test_chunked_draws_ignore_worker_count(self):
        n = 2 * CHUNK_SIZE + 517
        fill = lambda rng, size: rng.standard_normal((size, 2))
        serial = draw_chunked(SEED, 'chunks', n, fill, workers=1)
        threaded = draw_chunked(SEED, 'chunks', n, fill, workers=4)
        self.assertEqual(serial.shape, (n, 2))
        np.testing.assert_array_equal(serial, threaded)


class CopulaSpecTests(SimpleTestCase):
    def test_validation(self):
        for kind, param in (('gaussian', 1.5), ('gaussian', None), ('clayton', 0.0),
                            ('clayton', -2.0), ('independence', 0.3), ('frank', 1.0)):
            with self.assertRaises(InvalidInputError):
                CopulaSpec(kind, param)

    def test_parse_and_label(self):
        spec = CopulaSpec.parse('gaussian:-0.5')
        self.assertEqual(spec.kind, CopulaKind.GAUSSIAN)
        self.assertEqual(spec.param, -0.5)
        self.assertEqual(spec.label, 'gaussian_-0.5')
        self.assertEqual(CopulaSpec.parse('clayton:2').label, 'clayton_2')
        self.assertEqual(CopulaSpec.parse(' Independence ').label, 'independence')
        with self.assertRaises(InvalidInputError):
            CopulaSpec.parse('clayton:abc')


class SampleCopulaTests(SimpleTestCase):
    def test_comonotone_pairs_on_diagonal(self):
        pairs = sample_copula(CopulaSpec('comonotone'), 1000, SEED)
        np.testing.assert_array_equal(pairs[:, 0], pairs[:, 1])

    def test_uniform_margins_in_open_square(self):
        for spec in (CopulaSpec('gaussian', 0.5), CopulaSpec('clayton', 4.0),
                     CopulaSpec('independence'), CopulaSpec('countermonotone')):
            pairs = sample_copula(spec, 20_000, SEED)
            self.assertTrue(np.all((pairs > 0) & (pairs < 1)))
            np.testing.assert_allclose(pairs.mean(axis=0), [0.5, 0.5], atol=0.01)

    def test_gaussian_kendall_tau(self):
        pairs = sample_copula(CopulaSpec('gaussian', 0.5), 50_000, SEED)
        tau = stats.kendalltau(pairs[:, 0], pairs[:, 1])[0]
        self.assertAlmostEqual(tau, 2 / math.pi * math.asin(0.5), delta=0.01)

    def test_clayton_kendall_tau(self):
        pairs = sample_copula(CopulaSpec('clayton', 2.0), 50_000, SEED)
        tau = stats.kendalltau(pairs[:, 0], pairs[:, 1])[0]
        self.assertAlmostEqual(tau, 0.5, delta=0.01)

    def test_gaussian_radial_symmetry(self):
        spec = CopulaSpec('gaussian', 0.5)
        a = sample_copula(spec, 50_000, SEED, stream='cloud_a')
        b = sample_copula(spec, 50_000, SEED, stream='cloud_b')
        result = stats.ks_2samp(a.min(axis=1), 1.0 - b.max(axis=1))
        self.assertGreater(result.pvalue, 0.001)

    def test_clayton_is_not_radially_symmetric(self):
        spec = CopulaSpec('clayton', 4.0)
        a = sample_copula(spec, 50_000, SEED, stream='cloud_a')
        b = sample_copula(spec, 50_000, SEED, stream='cloud_b')
        result = stats.ks_2samp(a.min(axis=1), 1.0 - b.max(axis=1))
        self.assertLess(result.pvalue, 0.001)

    def test_same_seed_same_pairs(self):
        spec = CopulaSpec('clayton', 6.0)
        first = sample_copula(spec, 25_000, Seed(99))
        np.testing.assert_array_equal(first, sample_copula(spec, 25_000, Seed(99)))
        self.assertFalse(np.array_equal(first, sample_copula(spec, 25_000, Seed(100))))

    @override_settings(BOUNDS_WORKERS=3)
    def test_worker_setting_does_not_change_pairs(self):
        spec = CopulaSpec('gaussian', -0.5)
        np.testing.assert_array_equal(
            sample_copula(spec, 25_000, SEED),
            sample_copula(spec, 25_000, SEED, workers=1),
        )


class ReorderTests(SimpleTestCase):
    def test_rank_reorder_example(self):
        uniforms = np.array([[0.1, 0.9], [0.5, 0.2], [0.8, 0.4]])
        pairs = rank_reorder(Sample([10, 20, 30]), Sample([1, 2, 3]), uniforms)
        np.testing.assert_array_equal(pairs.first, [10, 20, 30])
        np.testing.assert_array_equal(pairs.second, [3, 1, 2])

    def test_rank_reorder_keeps_marginals(self):
        rng = np.random.default_rng(4)
        s1, s2 = Sample(rng.normal(size=500)), Sample(rng.gamma(2.0, size=500))
        pairs = rank_reorder(s1, s2, sample_copula(CopulaSpec('clayton', 2.0), 500, SEED))
        np.testing.assert_array_equal(np.sort(pairs.first), s1.values)
        np.testing.assert_array_equal(np.sort(pairs.second), s2.values)

    def test_ties_keep_original_order(self):
        uniforms = np.array([[0.5, 0.5], [0.5, 0.1], [0.2, 0.5]])
        pairs = rank_reorder(Sample([1, 2, 3]), Sample([1, 2, 3]), uniforms)
        np.testing.assert_array_equal(pairs.first, [2, 3, 1])
        np.testing.assert_array_equal(pairs.second, [2, 1, 3])

    def test_comonotone_uniforms_match_extreme_transform(self):
        rng = np.random.default_rng(12)
        s1, s2 = Sample(rng.normal(size=2000)), Sample(rng.normal(size=2000))
        for kind in (CopulaKind.COMONOTONE, CopulaKind.COUNTERMONOTONE):
            uniforms = sample_copula(CopulaSpec(kind), 2000, SEED)
            reordered = difference(rank_reorder(s1, s2, uniforms))
            extreme = difference(extreme_transform(s1, s2, kind))
            np.testing.assert_array_equal(reordered.values, extreme.values)

    def test_countermonotone_pairing_ignores_tied_uniforms(self):
        s1, s2 = Sample([1.0, 2.0, 3.0]), Sample([10.0, 20.0, 30.0])
        u = np.array([1e-17, 2e-17, 0.5])
        self.assertEqual(1.0 - u[0], 1.0 - u[1])
        tied = difference(rank_reorder(s1, s2, np.column_stack([u, 1.0 - u])))
        np.testing.assert_array_equal(tied.values, [-28.0, -19.0, -7.0])

        paired = reorder(s1, s2, CopulaSpec('countermonotone'), SEED)
        np.testing.assert_array_equal(paired.first, [1.0, 2.0, 3.0])
        np.testing.assert_array_equal(paired.second, [30.0, 20.0, 10.0])

    def test_reorder_matches_rank_reorder_for_parametric_copulas(self):
        rng = np.random.default_rng(13)
        s1, s2 = Sample(rng.normal(size=1000)), Sample(rng.gamma(2.0, size=1000))
        spec = CopulaSpec('clayton', 4.0)
        expected = rank_reorder(s1, s2, sample_copula(spec, 1000, SEED))
        paired = reorder(s1, s2, spec, SEED)
        np.testing.assert_array_equal(paired.first, expected.first)
        np.testing.assert_array_equal(paired.second, expected.second)
        with self.assertRaises(InvalidInputError):
            reorder(s1, s2, 'clayton', SEED)

    def test_length_mismatch(self):
        with self.assertRaises(InvalidInputError):
            rank_reorder(Sample([1, 2]), Sample([1, 2, 3]), np.full((3, 2), 0.5))
        with self.assertRaises(InvalidInputError):
            extreme_transform(Sample([1, 2]), Sample([1, 2, 3]), 'comonotone')
        with self.assertRaises(InvalidInputError):
            extreme_transform(Sample([1, 2]), Sample([1, 2]), 'gaussian')

    def test_extreme_transform_examples(self):
        s1, s2 = Sample([1, 3, 2]), Sample([5, 4, 6])
        co = extreme_transform(s1, s2, 'comonotone')
        np.testing.assert_array_equal(np.column_stack([co.first, co.second]), [[1, 4], [2, 5], [3, 6]])
        counter = extreme_transform(s1, s2, 'countermonotone')
        np.testing.assert_array_equal(
            np.column_stack([counter.first, counter.second]), [[1, 6], [2, 5], [3, 4]]
        )
        np.testing.assert_array_equal(difference(co).values, [-3, -3, -3])
        np.testing.assert_array_equal(difference(counter).values, [-5, -3, -1])

    def test_paired_sample_validation(self):
        with self.assertRaises(InvalidInputError):
            PairedSample([1.0, 2.0], [1.0])
        with self.assertRaises(InvalidInputError):
            PairedSample([1.0, np.nan], [1.0, 2.0])

    def test_mean_is_identical_across_copulas(self):
        # real values on a 2**-40 grid: every difference is exact, plain summation is not
        rng = np.random.default_rng(31)
        scale = 2.0 ** 40
        s1 = Sample(np.round(rng.uniform(-500, 500, size=3000) * scale) / scale)
        s2 = Sample(np.round(rng.uniform(-200, 900, size=3000) * scale) / scale)
        self.assertFalse(np.all(s1.values == np.round(s1.values)))
        specs = [CopulaSpec('independence'), CopulaSpec('comonotone'),
                 CopulaSpec('countermonotone'), CopulaSpec('gaussian', -0.5),
                 CopulaSpec('gaussian', 0.5), CopulaSpec('clayton', 2.0), CopulaSpec('clayton', 6.0)]
        means = {difference(reorder(s1, s2, spec, SEED)).mean for spec in specs}
        self.assertEqual(len(means), 1)
        self.assertAlmostEqual(means.pop(), s1.mean - s2.mean, places=10)
