import numpy as np
from django.test import SimpleTestCase
from scipy import stats

from copulas.rng import Seed
from copulas.sampling import CopulaSpec, difference, extreme_transform, reorder
from distributions.empirical import Sample, ecdf_eval, median_difference, quantile
from layers.payoffs import LayerSpec, expected_layer_payoff
from longevity_bounds.exceptions import InvalidInputError
from .detection import CrossingSet, Region, classify_regions, detect_crossings
from .regimes import (
    BoundRegime,
    CrossingOrder,
    CrossingTriple,
    SymmetricLocationScaleSpec,
    bound_regime,
    crossing_order,
    dispersive_shortcut,
    regime_holds,
    symmetric_common_crossing,
)

SEED = Seed(2010)
KORTIS = LayerSpec(0.034, 0.039)
ALL_COPULAS = [
    CopulaSpec('independence'), CopulaSpec('comonotone'), CopulaSpec('countermonotone'),
    CopulaSpec('gaussian', -0.5), CopulaSpec('gaussian', 0.0), CopulaSpec('gaussian', 0.5),
    CopulaSpec('clayton', 2.0), CopulaSpec('clayton', 4.0), CopulaSpec('clayton', 6.0),
]


def crossing_set(points, first_sign=-1, lower=-10.0, upper=10.0):
    signs = tuple(first_sign * (-1) ** k for k in range(len(points) + 1))
    return CrossingSet(points=tuple(points), signs=signs, band=0.0, lower=lower, upper=upper)


def triple_of(s1, s2, spec, band, seed=SEED):
    """Differences and crossing sets for one copula on shared marginals."""
    ic = difference(extreme_transform(s1, s2, 'comonotone'))
    icm = difference(extreme_transform(s1, s2, 'countermonotone'))
    i = difference(reorder(s1, s2, spec, seed))
    cs_c = detect_crossings(ic.dist(), i.dist(), band)
    cs_cm = detect_crossings(i.dist(), icm.dist(), band)
    cs_star = detect_crossings(ic.dist(), icm.dist(), band)
    return (i, ic, icm), (cs_c, cs_cm, cs_star)


class DetectCrossingsTests(SimpleTestCase):
    def test_identical_inputs_have_no_crossing(self):
        sample = Sample(np.random.default_rng(1).normal(size=1000))
        cs = detect_crossings(sample.dist(), sample.dist())
        self.assertTrue(cs.is_empty)
        self.assertEqual(cs.first_sign, 0)

    def test_normal_scale_family_crosses_at_zero(self):
        n = 10_000
        z = stats.norm.ppf((np.arange(n) + 0.5) / n)
        cs = detect_crossings(Sample(z).dist(), Sample(2 * z).dist())
        self.assertEqual(cs.n_crossings, 1)
        self.assertLess(abs(cs.points[0]), 0.01)

    def test_comonotone_against_countermonotone_example(self):
        a, b = Sample([-3, -3, -3]).dist(), Sample([-5, -3, -1]).dist()
        cs = detect_crossings(a, b, band=0.0)
        self.assertEqual(cs.points, (-3.0,))
        self.assertEqual((cs.lower, cs.upper), (-5.0, -1.0))
        self.assertTrue(detect_crossings(a, b).is_empty)

    def test_negative_band_rejected(self):
        sample = Sample([1.0, 2.0]).dist()
        with self.assertRaises(InvalidInputError):
            detect_crossings(sample, sample, band=-0.1)

    def test_signs_alternate(self):
        rng = np.random.default_rng(44)
        for _ in range(25):
            a = Sample(rng.integers(0, 30, size=60)).dist()
            b = Sample(rng.integers(0, 30, size=60)).dist()
            cs = detect_crossings(a, b, band=0.0)
            self.assertEqual(len(cs.signs), cs.n_crossings + (1 if cs.signs else 0))
            self.assertTrue(all(s != t for s, t in zip(cs.signs, cs.signs[1:])))
            self.assertTrue(all(cs.lower < d < cs.upper for d in cs.points))


class ClassifyRegionsTests(SimpleTestCase):
    def test_single_crossing(self):
        cs = detect_crossings(Sample([-3, -3, -3]).dist(), Sample([-5, -3, -1]).dist(), band=0.0)
        regions = classify_regions(cs, 'first')
        self.assertEqual(regions.le, [Region(-5.0, -3.0, open_below=True)])
        self.assertEqual(regions.ge, [Region(-3.0, -1.0, open_above=True)])

    def test_three_crossings(self):
        regions = classify_regions(crossing_set([1.0, 2.0, 3.0], lower=0.0, upper=4.0), 'first')
        self.assertEqual(regions.le, [Region(0.0, 1.0, open_below=True), Region(2.0, 3.0)])
        self.assertEqual(regions.ge, [Region(3.0, 4.0, open_above=True), Region(1.0, 2.0)])

    def test_five_crossings_match_pointwise_comparison(self):
        a = Sample([1, 4, 5, 8, 9, 12]).dist()
        b = Sample([2, 3, 6, 7, 10, 11]).dist()
        cs = detect_crossings(a, b, band=0.0)
        self.assertEqual(cs.points, (3.0, 5.0, 7.0, 9.0, 11.0))

        regions = classify_regions(cs, 'second')
        self.assertEqual(len(regions.le), 3)
        self.assertEqual(len(regions.ge), 3)
        for region in regions.le:
            xs = np.linspace(max(region.lower, 0.0), min(region.upper, 13.0), 41)[1:-1]
            self.assertTrue(np.all(b.cdf(xs) <= a.cdf(xs)), str(region))
        for region in regions.ge:
            xs = np.linspace(max(region.lower, 0.0), min(region.upper, 13.0), 41)[1:-1]
            self.assertTrue(np.all(b.cdf(xs) >= a.cdf(xs)), str(region))

    def test_direction_must_match_first_sign(self):
        a = Sample([1, 4, 5, 8, 9, 12]).dist()
        b = Sample([2, 3, 6, 7, 10, 11]).dist()
        with self.assertRaises(InvalidInputError):
            classify_regions(detect_crossings(a, b, band=0.0), 'first')
        with self.assertRaises(InvalidInputError):
            classify_regions(crossing_set([0.0]), 'sideways')

    def test_identical_inputs_cover_everything(self):
        sample = Sample([1.0, 2.0, 3.0]).dist()
        regions = classify_regions(detect_crossings(sample, sample), 'first')
        self.assertEqual(regions.le, regions.ge)
        self.assertTrue(regions.le[0].contains(-1e9) and regions.le[0].contains(1e9))


class BoundRegimeTests(SimpleTestCase):
    def test_coinciding_crossing(self):
        cs = crossing_set([0.0], lower=-1.0, upper=1.0)
        self.assertEqual(bound_regime(cs, cs, LayerSpec(0.2, 0.5)), BoundRegime.PRESERVED)
        self.assertEqual(bound_regime(cs, cs, LayerSpec(-0.5, -0.2)), BoundRegime.REVERSED)
        self.assertEqual(bound_regime(cs, cs, LayerSpec(-0.1, 0.1)), BoundRegime.AMBIGUOUS)
        self.assertEqual(bound_regime(cs, cs, LayerSpec(0.0, 0.5)), BoundRegime.PRESERVED)

    def test_mixed_and_partial_regimes(self):
        layer = LayerSpec(-0.2, 0.3)
        left, mid, right = crossing_set([-0.5]), crossing_set([0.0]), crossing_set([0.5])
        self.assertEqual(bound_regime(right, left, layer), BoundRegime.BOTH_UPPER)
        self.assertEqual(bound_regime(left, right, layer), BoundRegime.BOTH_LOWER)
        self.assertEqual(bound_regime(right, mid, layer), BoundRegime.ONLY_C_UPPER)
        self.assertEqual(bound_regime(left, mid, layer), BoundRegime.ONLY_C_LOWER)
        self.assertEqual(bound_regime(mid, left, layer), BoundRegime.ONLY_CM_UPPER)
        self.assertEqual(bound_regime(mid, right, layer), BoundRegime.ONLY_CM_LOWER)

    def test_layer_must_be_valid(self):
        cs = crossing_set([0.0])
        with self.assertRaises(InvalidInputError):
            bound_regime(cs, cs, (0.1, 0.2))

    def test_misoriented_crossing_set_raises(self):
        flipped = crossing_set([0.0], first_sign=1)
        good = crossing_set([0.0])
        with self.assertRaises(InvalidInputError):
            bound_regime(flipped, good, LayerSpec(0.2, 0.5))
        with self.assertRaises(InvalidInputError):
            bound_regime(good, flipped, LayerSpec(0.2, 0.5))


class RegimeHoldsTests(SimpleTestCase):
    def test_each_regime_checks_its_own_sides(self):
        below, middle, above = 1.0, 2.0, 3.0
        self.assertTrue(regime_holds(BoundRegime.PRESERVED, middle, below, above))
        self.assertFalse(regime_holds(BoundRegime.PRESERVED, middle, above, below))
        self.assertTrue(regime_holds(BoundRegime.REVERSED, middle, above, below))
        self.assertFalse(regime_holds(BoundRegime.REVERSED, middle, below, above))
        self.assertTrue(regime_holds(BoundRegime.BOTH_UPPER, below, middle, above))
        self.assertFalse(regime_holds(BoundRegime.BOTH_UPPER, middle, below, above))
        self.assertTrue(regime_holds(BoundRegime.BOTH_LOWER, above, below, middle))
        self.assertFalse(regime_holds(BoundRegime.BOTH_LOWER, middle, below, above))
        self.assertTrue(regime_holds(BoundRegime.ONLY_CM_UPPER, middle, above, above))
        self.assertFalse(regime_holds(BoundRegime.ONLY_CM_UPPER, middle, above, below))
        self.assertTrue(regime_holds(BoundRegime.ONLY_C_UPPER, middle, above, below))
        self.assertFalse(regime_holds(BoundRegime.ONLY_C_UPPER, middle, below, above))
        self.assertTrue(regime_holds(BoundRegime.ONLY_CM_LOWER, middle, above, below))
        self.assertFalse(regime_holds(BoundRegime.ONLY_CM_LOWER, middle, below, above))
        self.assertTrue(regime_holds(BoundRegime.ONLY_C_LOWER, middle, below, above))
        self.assertFalse(regime_holds(BoundRegime.ONLY_C_LOWER, middle, above, below))
        self.assertTrue(regime_holds(BoundRegime.AMBIGUOUS, middle, above, below))

    def test_ties_and_tolerance(self):
        self.assertTrue(regime_holds('preserved', 2.0, 2.0, 2.0))
        self.assertFalse(regime_holds('preserved', 2.0, 2.0 + 1e-9, 3.0))
        self.assertTrue(regime_holds('preserved', 2.0, 2.0 + 1e-9, 3.0, tolerance=1e-8))
        with self.assertRaises(ValueError):
            regime_holds('sideways', 1.0, 1.0, 1.0)


class LayerInsideRegionTests(SimpleTestCase):
    """A layer inside one region orders the expected payoffs the way the region says."""

    def _layers_inside(self, region, support, rng, count=4):
        lower = support[0] - 2 if region.open_below else region.lower
        upper = support[1] + 2 if region.open_above else region.upper
        points = np.arange(np.ceil(2 * lower) / 2, np.floor(2 * upper) / 2 + 0.25, 0.5)
        if points.size < 2:
            return []
        layers = []
        for _ in range(count):
            delta, epsilon = np.sort(rng.choice(points, size=2, replace=False))
            layers.append(LayerSpec(delta, epsilon))
        return layers

    def _check(self, cs, smaller, larger, rng):
        regions = classify_regions(cs, 'first')
        support = (cs.lower, cs.upper)
        checked = 0
        for region in regions.le:
            for layer in self._layers_inside(region, support, rng):
                self.assertGreaterEqual(
                    expected_layer_payoff(smaller, layer), expected_layer_payoff(larger, layer)
                )
                checked += 1
        for region in regions.ge:
            for layer in self._layers_inside(region, support, rng):
                self.assertLessEqual(
                    expected_layer_payoff(smaller, layer), expected_layer_payoff(larger, layer)
                )
                checked += 1
        return checked

    def test_randomized_scenarios(self):
        rng = np.random.default_rng(2010)
        checked = 0
        for trial in range(100):
            s1 = Sample(rng.integers(-40, 40, size=200))
            s2 = Sample(rng.integers(-20, 20, size=200) * rng.integers(1, 4))
            spec = ALL_COPULAS[trial % len(ALL_COPULAS)]
            (i, ic, icm), (cs_c, cs_cm, _) = triple_of(s1, s2, spec, band=0.0, seed=Seed(trial))
            checked += self._check(cs_c, ic, i, rng)
            checked += self._check(cs_cm, i, icm, rng)
        self.assertGreater(checked, 500)


class CrossingOrderTests(SimpleTestCase):
    def test_table_rows(self):
        near = CrossingTriple(d_c=0.001728, d_star=0.001729, d_cm=0.001843)
        self.assertEqual(crossing_order(near, band=1e-5), CrossingOrder.C_STAR_CM)
        self.assertEqual(crossing_order(near, band=1e-7), CrossingOrder.C_STAR_CM)
        self.assertEqual(crossing_order(near, band=1e-3), CrossingOrder.COINCIDE)
        split = CrossingTriple(d_c=0.004174, d_star=0.001729, d_cm=-0.000367)
        self.assertEqual(crossing_order(split, band=1e-5), CrossingOrder.CM_STAR_C)

    def test_coincide_and_violation(self):
        self.assertEqual(crossing_order(CrossingTriple(0.5, 0.5, 0.5), band=0.0), CrossingOrder.COINCIDE)
        outside = CrossingTriple(d_c=0.0, d_cm=1.0, d_star=2.0)
        self.assertEqual(crossing_order(outside, band=0.1), CrossingOrder.VIOLATION)

    def test_missing_point(self):
        with self.assertRaises(InvalidInputError):
            crossing_order(CrossingTriple(d_c=0.1, d_cm=0.2))


class DispersiveShortcutTests(SimpleTestCase):
    def test_scale_family_returns_median_difference(self):
        draws = np.random.default_rng(3).standard_normal(10_000)
        s1, s2 = Sample(draws), Sample(2 * draws)
        self.assertEqual(dispersive_shortcut(s1, s2), median_difference(s1, s2))

    def test_equal_samples(self):
        s1 = Sample(np.random.default_rng(4).standard_normal(1000))
        self.assertEqual(dispersive_shortcut(s1, s1), 0.0)
        comonotone = difference(extreme_transform(s1, s1, 'comonotone'))
        self.assertTrue(np.all(comonotone.values == 0.0))

    def test_unordered_marginals(self):
        ranks = np.arange(1, 1001) / 1000
        self.assertIsNone(dispersive_shortcut(Sample(ranks), Sample(ranks ** 2)))

    def test_grid_marginals_cross_at_median_difference(self):
        n = 100_000
        z = stats.norm.ppf((np.arange(n) + 0.5) / n)
        s1, s2 = Sample(0.016 + 0.008 * z), Sample(0.004 + 0.002 * z)
        d_star = dispersive_shortcut(s1, s2)
        ic = difference(extreme_transform(s1, s2, 'comonotone'))
        icm = difference(extreme_transform(s1, s2, 'countermonotone'))
        self.assertEqual(ecdf_eval(ic, d_star), 0.5)
        self.assertEqual(ecdf_eval(icm, d_star), 0.5)
        cs = detect_crossings(ic.dist(), icm.dist())
        self.assertEqual(cs.n_crossings, 1)
        self.assertLess(abs(cs.points[0] - d_star), 1e-5)

    def test_simulated_marginals_cross_at_median_difference(self):
        n = 100_000
        w = SEED.generator('symmetric_base').standard_normal(n // 2)
        spec = SymmetricLocationScaleSpec(
            mu1=0.016, mu2=0.004, sigma1=0.008, sigma2=0.002, base=Sample(np.r_[w, -w]),
        )
        s1, s2 = spec.marginals()
        d_star = dispersive_shortcut(s1, s2)
        self.assertIsNotNone(d_star)
        self.assertAlmostEqual(d_star, symmetric_common_crossing(spec), delta=1e-4)

        ic = difference(extreme_transform(s1, s2, 'comonotone'))
        icm = difference(extreme_transform(s1, s2, 'countermonotone'))
        self.assertLessEqual(abs(ecdf_eval(ic, d_star) - 0.5), 2 / n)
        self.assertLessEqual(abs(ecdf_eval(icm, d_star) - 0.5), 2 / n)

        cs = detect_crossings(ic.dist(), icm.dist())
        self.assertEqual(cs.band, 2 / n)
        self.assertEqual(cs.n_crossings, 1)
        grid = np.union1d(ic.values, icm.values)
        steps = np.searchsorted(grid, cs.points[0]) - np.searchsorted(grid, d_star)
        self.assertLessEqual(abs(int(steps)), 2)


class SymmetricCommonCrossingTests(SimpleTestCase):
    def test_location_difference(self):
        spec = SymmetricLocationScaleSpec(mu1=0.1, mu2=0.03, sigma1=1.0, sigma2=2.0)
        self.assertAlmostEqual(symmetric_common_crossing(spec), 0.07)
        same = SymmetricLocationScaleSpec(mu1=0.2, mu2=0.2, sigma1=1.0, sigma2=3.0, base=stats.t(4))
        self.assertEqual(symmetric_common_crossing(same), 0.0)

    def test_validation(self):
        with self.assertRaises(InvalidInputError):
            SymmetricLocationScaleSpec(mu1=0.0, mu2=0.0, sigma1=0.0, sigma2=1.0)
        with self.assertRaises(InvalidInputError):
            SymmetricLocationScaleSpec(mu1=0.0, mu2=0.0, sigma1=1.0, sigma2=1.0, base=stats.expon())

    def test_gaussian_copula_crossings_coincide(self):
        spec = SymmetricLocationScaleSpec(mu1=0.016, mu2=0.004, sigma1=0.002, sigma2=0.001)
        target = symmetric_common_crossing(spec)
        s1, s2 = spec.draw_marginals(100_000, SEED)
        samples = {}
        for rho in (-0.5, 0.0, 0.5):
            (i, _, _), sets = triple_of(s1, s2, CopulaSpec('gaussian', rho), band=0.002)
            samples[rho] = i
            for cs in sets:
                self.assertEqual(cs.n_crossings, 1, f"rho={rho}")
                self.assertLess(abs(cs.points[0] - target), 5e-4, f"rho={rho}")
            self.assertEqual(crossing_order(CrossingTriple.from_sets(*sets), band=1e-3), CrossingOrder.COINCIDE)
            self.assertEqual(bound_regime(sets[0], sets[1], KORTIS), BoundRegime.PRESERVED)

        # two members of the same family cross at the common point as well
        cs = detect_crossings(samples[0.5].dist(), samples[-0.5].dist(), band=0.002)
        self.assertEqual(cs.n_crossings, 1)
        self.assertLess(abs(cs.points[0] - target), 5e-4)

    def test_sample_base(self):
        w = SEED.generator('symmetric_base').standard_normal(25_000)
        base = Sample(np.r_[w, -w])
        spec = SymmetricLocationScaleSpec(mu1=0.016, mu2=0.004, sigma1=0.002, sigma2=0.001, base=base)
        self.assertTrue(spec.is_empirical)
        self.assertAlmostEqual(symmetric_common_crossing(spec), 0.012)
        self.assertEqual(spec.base_quantile(0.25), quantile(base, 0.25))

        s1, s2 = spec.draw_marginals(20_000, SEED)
        self.assertEqual((s1.n, s2.n), (20_000, 20_000))
        self.assertGreaterEqual(s1.lower, 0.016 + 0.002 * base.lower - 1e-15)
        self.assertLessEqual(s2.upper, 0.004 + 0.001 * base.upper + 1e-15)
        self.assertTrue(np.all(np.isin(s1.values, 0.016 + 0.002 * base.values)))

        shared_1, shared_2 = spec.marginals()
        self.assertEqual((shared_1.n, shared_2.n), (base.n, base.n))
        self.assertAlmostEqual(median_difference(shared_1, shared_2), 0.012, delta=1e-4)

        from_dist = SymmetricLocationScaleSpec(mu1=0.0, mu2=0.0, sigma1=1.0, sigma2=2.0, base=base.dist())
        self.assertTrue(from_dist.is_empirical)

    def test_sample_base_tolerates_sampling_noise(self):
        draws = SEED.generator('noisy_base').standard_normal(2000)
        spec = SymmetricLocationScaleSpec(mu1=0.0, mu2=0.0, sigma1=1.0, sigma2=1.0, base=Sample(draws))
        self.assertTrue(spec.is_empirical)

    def test_sample_base_validation(self):
        skewed = Sample(SEED.generator('skewed_base').exponential(size=2000) - 1.0)
        with self.assertRaises(InvalidInputError):
            SymmetricLocationScaleSpec(mu1=0.0, mu2=0.0, sigma1=1.0, sigma2=1.0, base=skewed)
        with self.assertRaises(InvalidInputError):
            SymmetricLocationScaleSpec(mu1=0.0, mu2=0.0, sigma1=1.0, sigma2=1.0, base=[1.0, -1.0])
        with self.assertRaises(InvalidInputError):
            SymmetricLocationScaleSpec(mu1=0.0, mu2=0.0, sigma1=1.0, sigma2=1.0).marginals()

    def test_sample_base_crossings_coincide(self):
        w = SEED.generator('symmetric_base').standard_normal(50_000)
        spec = SymmetricLocationScaleSpec(
            mu1=0.016, mu2=0.004, sigma1=0.002, sigma2=0.001, base=Sample(np.r_[w, -w]),
        )
        target = symmetric_common_crossing(spec)
        s1, s2 = spec.draw_marginals(100_000, SEED)
        for rho in (-0.5, 0.5):
            _, sets = triple_of(s1, s2, CopulaSpec('gaussian', rho), band=0.002)
            for cs in sets:
                self.assertEqual(cs.n_crossings, 1, f"rho={rho}")
                self.assertLess(abs(cs.points[0] - target), 5e-4, f"rho={rho}")
            self.assertEqual(bound_regime(sets[0], sets[1], KORTIS), BoundRegime.PRESERVED)
