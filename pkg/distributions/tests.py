import numpy as np
from django.test import SimpleTestCase

from longevity_bounds.exceptions import InvalidInputError
from .empirical import (
    EmpiricalDist,
    OrderVerdict,
    Sample,
    dispersive_order_check,
    ecdf_eval,
    median_difference,
    quantile,
)


class SampleTests(SimpleTestCase):
    def test_values_are_sorted_and_read_only(self):
        sample = Sample([3.0, 1.0, 2.0])
        np.testing.assert_array_equal(sample.values, [1.0, 2.0, 3.0])
        self.assertEqual(sample.n, 3)
        with self.assertRaises(ValueError):
            sample.values[0] = 10.0

    def test_rejects_empty_and_non_finite(self):
        with self.assertRaises(InvalidInputError):
            Sample([])
        with self.assertRaises(InvalidInputError):
            Sample([1.0, np.nan])
        with self.assertRaises(InvalidInputError):
            Sample([1.0, np.inf])

    def test_support_bounds(self):
        dist = EmpiricalDist(Sample([4, -2, 7, 0]))
        self.assertEqual(dist.lower, -2.0)
        self.assertEqual(dist.upper, 7.0)
        self.assertEqual(dist.cdf(dist.lower - 1e-9), 0.0)
        self.assertEqual(dist.cdf(dist.upper), 1.0)


class EcdfTests(SimpleTestCase):
    def test_counts_values_at_or_below(self):
        sample = Sample([1, 2, 3])
        self.assertAlmostEqual(ecdf_eval(sample, 2), 2 / 3)
        self.assertEqual(ecdf_eval(sample, 0.5), 0.0)
        self.assertEqual(ecdf_eval(sample, 99), 1.0)

    def test_standard_normal_median(self):
        draws = np.random.default_rng(7).standard_normal(10_000)
        self.assertAlmostEqual(ecdf_eval(Sample(draws), 0.0), 0.5, delta=0.02)

    def test_non_decreasing(self):
        sample = Sample(np.random.default_rng(3).integers(0, 20, size=200))
        xs = np.linspace(-5, 25, 301)
        self.assertTrue(np.all(np.diff(ecdf_eval(sample, xs)) >= 0))


class QuantileTests(SimpleTestCase):
    def test_left_continuous_inverse(self):
        self.assertEqual(quantile(Sample([1, 2, 3]), 0.5), 2.0)
        self.assertEqual(quantile(Sample([1, 2, 3, 4]), 0.5), 2.0)
        self.assertEqual(quantile(Sample([5, 1, 9, 3]), 1.0), 9.0)

    def test_rejects_levels_outside_unit_interval(self):
        sample = Sample([1, 2, 3])
        for p in (0.0, -0.1, 1.5, np.nan):
            with self.assertRaises(InvalidInputError):
                quantile(sample, p)

    def test_galois_property_with_ties(self):
        sample = Sample(np.random.default_rng(11).integers(0, 15, size=300))
        for v in np.unique(sample.values):
            self.assertEqual(quantile(sample, ecdf_eval(sample, v)), v)

    def test_non_decreasing_in_level(self):
        sample = Sample(np.random.default_rng(5).standard_normal(500))
        levels = np.linspace(0.001, 1.0, 400)
        self.assertTrue(np.all(np.diff(quantile(sample, levels)) >= 0))


class MedianDifferenceTests(SimpleTestCase):
    def test_examples(self):
        self.assertEqual(median_difference(Sample([1, 2, 3]), Sample([10, 20, 30])), -18.0)
        s = Sample([0.4, 0.1, 0.3])
        self.assertEqual(median_difference(s, s), 0.0)

    def test_antisymmetric(self):
        rng = np.random.default_rng(21)
        s1, s2 = Sample(rng.normal(size=101)), Sample(rng.normal(2, 3, size=101))
        self.assertEqual(median_difference(s1, s2), -median_difference(s2, s1))

    def test_matches_countermonotone_median(self):
        rng = np.random.default_rng(8)
        s1, s2 = Sample(rng.normal(size=1001)), Sample(rng.normal(0.5, 2, size=1001))
        counter = Sample(s1.values - s2.values[::-1])
        self.assertEqual(quantile(counter, 0.5), median_difference(s1, s2))


class DispersiveOrderTests(SimpleTestCase):
    def setUp(self):
        self.draws = np.random.default_rng(2010).standard_normal(10_000)

    def test_scale_family(self):
        s1 = Sample(self.draws)
        s2 = Sample(2 * self.draws)
        self.assertEqual(dispersive_order_check(s1, s2), OrderVerdict.FIRST_DISP_SECOND)
        self.assertEqual(dispersive_order_check(s2, s1), OrderVerdict.SECOND_DISP_FIRST)

    def test_identical_samples(self):
        s1 = Sample(self.draws)
        self.assertEqual(dispersive_order_check(s1, s1), OrderVerdict.DEGENERATE_EQUAL)

    def test_non_monotone_quantile_difference(self):
        ranks = np.arange(1, 1001) / 1000
        s1, s2 = Sample(ranks), Sample(ranks ** 2)
        self.assertEqual(dispersive_order_check(s1, s2), OrderVerdict.NEITHER)

    def test_rejects_malformed_grid(self):
        s1 = Sample(self.draws)
        for grid in ([0.2, 0.5], [0.0, 0.5, 0.9], [0.1, 0.5, 1.0], [0.1, 0.6, 0.5]):
            with self.assertRaises(InvalidInputError):
                dispersive_order_check(s1, s1, grid=grid)
