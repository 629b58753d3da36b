import numpy as np
from django.test import SimpleTestCase
from scipy import stats

from copulas.rng import Seed
from copulas.sampling import CopulaSpec, difference, extreme_transform, rank_reorder, sample_copula
from distributions.empirical import Sample
from longevity_bounds.exceptions import InvalidInputError
from .payoffs import (
    LayerSpec,
    expected_layer_payoff,
    layer_payoff,
    layer_payoff_curve,
    stop_loss,
    stop_loss_curve,
    uncertainty_spread,
)

KORTIS = LayerSpec(0.034, 0.039)


class LayerSpecTests(SimpleTestCase):
    def test_principal_defaults_to_width(self):
        self.assertEqual(KORTIS.principal, KORTIS.epsilon - KORTIS.delta)
        self.assertEqual(LayerSpec(0.0, 1.0, principal=5.0).principal, 5.0)

    def test_rejects_invalid_layers(self):
        for args in ((0.04, 0.03), (0.03, 0.03), (0.0, 1.0, 0.0), (0.0, 1.0, -1.0), (np.nan, 1.0)):
            with self.assertRaises(InvalidInputError):
                LayerSpec(*args)
        with self.assertRaises(InvalidInputError):
            layer_payoff(0.1, (0.0, 1.0))


class LayerPayoffTests(SimpleTestCase):
    def test_kortis_layer(self):
        layer = LayerSpec(0.034, 0.039, principal=0.005)
        self.assertEqual(layer_payoff(0.030, layer), 0.0)
        self.assertEqual(layer_payoff(0.050, layer), 0.005)
        self.assertAlmostEqual(layer_payoff(0.036, KORTIS), 0.002, places=12)

    def test_continuous_and_non_decreasing(self):
        xs = np.linspace(0.02, 0.05, 3001)
        payoff = layer_payoff(xs, KORTIS)
        self.assertTrue(np.all(np.diff(payoff) >= 0))
        self.assertLess(np.max(np.diff(payoff)), 2e-5)


class StopLossTests(SimpleTestCase):
    def test_examples(self):
        self.assertAlmostEqual(stop_loss(Sample([1, 2, 3]), 2), 1 / 3)
        self.assertEqual(stop_loss(Sample([1, 2, 3]), 3), 0.0)
        self.assertEqual(stop_loss(Sample([1, 2, 3]), 10), 0.0)

    def test_standard_normal_oracle(self):
        draws = Sample(np.random.default_rng(2010).standard_normal(100_000))
        self.assertAlmostEqual(stop_loss(draws, 0.0), stats.norm.pdf(0.0), delta=0.005)

    def test_curve_matches_pointwise(self):
        sample = Sample(np.random.default_rng(1).normal(0.01, 0.02, size=5000))
        retentions = np.linspace(-0.1, 0.1, 41)
        expected = [stop_loss(sample, r) for r in retentions]
        np.testing.assert_allclose(stop_loss_curve(sample, retentions), expected, rtol=0, atol=1e-12)

    def test_convex_and_non_increasing(self):
        sample = Sample(np.random.default_rng(2).gamma(2.0, size=2000))
        curve = stop_loss_curve(sample, np.linspace(-1, 12, 200))
        self.assertTrue(np.all(np.diff(curve) <= 1e-12))
        self.assertTrue(np.all(np.diff(curve, n=2) >= -1e-12))


class ExpectedPayoffTests(SimpleTestCase):
    def test_three_point_average(self):
        sample = Sample([0.030, 0.036, 0.050])
        self.assertAlmostEqual(expected_layer_payoff(sample, KORTIS), 0.007 / 3, places=12)

    def test_layer_outside_support(self):
        sample = Sample([0.01, 0.02, 0.025])
        self.assertEqual(expected_layer_payoff(sample, KORTIS), 0.0)
        self.assertEqual(expected_layer_payoff(sample, LayerSpec(-0.2, -0.1, 0.5)), 0.5)

    def test_stop_loss_identity_and_bounds(self):
        rng = np.random.default_rng(17)
        for _ in range(50):
            sample = Sample(rng.normal(rng.uniform(-1, 1), rng.uniform(0.1, 2), size=500))
            delta = rng.uniform(-2, 2)
            layer = LayerSpec(delta, delta + rng.uniform(0.05, 1.0), principal=rng.uniform(0.5, 3))
            direct = expected_layer_payoff(sample, layer)
            identity = layer.slope * (stop_loss(sample, layer.delta) - stop_loss(sample, layer.epsilon))
            self.assertAlmostEqual(direct, identity, delta=1e-12 * layer.principal)
            self.assertTrue(0.0 <= direct <= layer.principal)

    def test_shifting_the_layer_up_never_increases_payoff(self):
        sample = Sample(np.random.default_rng(9).normal(0.01, 0.01, size=2000))
        for delta in np.linspace(-0.03, 0.05, 17):
            layer = LayerSpec(delta, delta + 0.005)
            base = expected_layer_payoff(sample, layer)
            self.assertLessEqual(expected_layer_payoff(sample, layer.shifted(0.001)), base)

    def test_payoff_curve_matches_direct_payoffs(self):
        sample = Sample(np.random.default_rng(5).normal(0.0, 0.03, size=4000))
        deltas = np.linspace(-0.15, 0.15, 61)
        curve = layer_payoff_curve(sample, deltas, 0.005)
        direct = [expected_layer_payoff(sample, LayerSpec(d, d + 0.005, 0.005)) for d in deltas]
        np.testing.assert_allclose(curve, direct, rtol=0, atol=1e-12)


class UncertaintySpreadTests(SimpleTestCase):
    def test_equal_samples(self):
        sample = Sample([0.03, 0.035, 0.04])
        report = uncertainty_spread(sample, sample, KORTIS)
        self.assertEqual(report.spread, 0.0)
        self.assertEqual(report.sign, 0)

    def test_layer_above_both_supports(self):
        report = uncertainty_spread(Sample([0.0, 0.01]), Sample([0.005]), KORTIS)
        self.assertEqual((report.e_cm, report.e_c, report.spread), (0.0, 0.0, 0.0))

    def test_enumerated_example(self):
        layer = LayerSpec(-4, -2, principal=2)
        report = uncertainty_spread(Sample([-5, -3, -1]), Sample([-3, -3, -3]), layer)
        self.assertAlmostEqual(report.e_cm, 1.0)
        self.assertAlmostEqual(report.e_c, 1.0)
        self.assertAlmostEqual(report.spread, 0.0)
        self.assertAlmostEqual(report.spread_pct_of_max, 100 * report.spread / layer.principal)

    def test_sign_flags_negative_spread(self):
        layer = LayerSpec(-4, -3, principal=1)
        report = uncertainty_spread(Sample([-5, -3, -1]), Sample([-3, -3, -3]), layer)
        self.assertLess(report.spread, 0)
        self.assertEqual(report.sign, -1)


class ConvexOrderSandwichTests(SimpleTestCase):
    """Stop-loss of any reordering sits between the comonotone and countermonotone ones."""

    def test_sandwich_holds_exactly(self):
        rng = np.random.default_rng(2010)
        seed = Seed(7)
        specs = [CopulaSpec('independence'), CopulaSpec('gaussian', -0.5),
                 CopulaSpec('gaussian', 0.5), CopulaSpec('clayton', 2.0)]
        for trial in range(200):
            s1 = Sample(rng.integers(-1000, 1000, size=1000))
            s2 = Sample(rng.integers(-1000, 1000, size=1000) * rng.integers(1, 4))
            spec = specs[trial % len(specs)]
            mixed = difference(rank_reorder(s1, s2, sample_copula(spec, 1000, seed, stream=trial)))
            co = difference(extreme_transform(s1, s2, 'comonotone'))
            counter = difference(extreme_transform(s1, s2, 'countermonotone'))
            for retention in rng.integers(-3000, 3000, size=20) / 2:
                self.assertLessEqual(stop_loss(co, retention), stop_loss(mixed, retention))
                self.assertLessEqual(stop_loss(mixed, retention), stop_loss(counter, retention))
