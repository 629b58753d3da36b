import math

import numpy as np
import pandas as pd
from django.test import SimpleTestCase

from longevity_bounds.exceptions import InvalidInputError, NumericalFailure
from .fitting import (
    apply_identifiability,
    fit_cbd,
    fit_factor_model,
    fit_timeseries,
    index_series,
)
from .params import (
    CBDParams,
    FactorParams,
    ModelKind,
    PopulationFactors,
    RandomWalkSpec,
    params_from_dict,
    params_to_dict,
)
from .simulation import forecast_random_walk, index_draws, simulate_index, simulate_rates
from .tables import IndexDefinition, MortalityTable, improvement_index

YEARS = np.arange(1990, 2010)
AGES = np.arange(60, 91)


def cbd_rates(theta, tau, ages=AGES):
    """Central rates (years x ages) whose one-year death odds are logit-linear in age."""
    return np.logaddexp(0.0, np.asarray(theta)[:, None] + ages[None, :] * np.asarray(tau)[:, None])


def table_from_rates(rates, years=YEARS, ages=AGES, exposure=1.0, population_id='synthetic', noise_seed=None):
    exposure = np.full(rates.shape, float(exposure))
    deaths = rates * exposure
    if noise_seed is not None:
        deaths = np.random.default_rng(noise_seed).poisson(deaths).astype(float)
    return MortalityTable(population_id, years, ages, deaths, exposure)


def factor_rates(lam, factors):
    """log m = lam + sum of beta_x * kappa_t over ``factors``."""
    log_m = np.broadcast_to(lam, (factors[0][1].size, lam.size)).copy()
    for beta, kappa in factors:
        log_m += kappa[:, None] * beta[None, :]
    return np.exp(log_m)


def exact_cbd_table():
    t = np.arange(YEARS.size)
    return table_from_rates(cbd_rates(-9 + 0.01 * t, np.full(YEARS.size, 0.1)), exposure=1e7)


class MortalityTableTests(SimpleTestCase):
    def test_rejects_nonpositive_exposure_naming_the_cell(self):
        exposure = np.ones((3, 3))
        exposure[1, 2] = 0.0
        with self.assertRaisesMessage(InvalidInputError, 'year 2001, age 62'):
            MortalityTable('x', [2000, 2001, 2002], [60, 61, 62], np.ones((3, 3)), exposure)

    def test_rejects_negative_deaths(self):
        deaths = np.ones((3, 3))
        deaths[0, 0] = -1.0
        with self.assertRaisesMessage(InvalidInputError, 'negative deaths at year 2000, age 60'):
            MortalityTable('x', [2000, 2001, 2002], [60, 61, 62], deaths, np.ones((3, 3)))

    def test_zero_deaths_allowed(self):
        table = MortalityTable('x', [2000, 2001], [60, 61], np.zeros((2, 2)), np.ones((2, 2)))
        self.assertEqual(table.rates.sum(), 0.0)

    def test_rejects_unsorted_axes(self):
        with self.assertRaises(InvalidInputError):
            MortalityTable('x', [2001, 2000], [60, 61], np.ones((2, 2)), np.ones((2, 2)))

    def test_restrict(self):
        table = exact_cbd_table().restrict(years=(1995, 1999), ages=(70, 72))
        self.assertEqual(table.shape, (5, 3))
        self.assertEqual(table.years[0], 1995)
        self.assertEqual(table.ages[-1], 72)
        with self.assertRaises(InvalidInputError):
            table.restrict(years=(1800, 1801))

    def test_from_frame_reports_missing_cell(self):
        frame = pd.DataFrame({
            'year': [2000, 2000, 2001],
            'age': [60, 61, 60],
            'deaths': [1.0, 2.0, 3.0],
            'exposure': [10.0, 10.0, 10.0],
        })
        with self.assertRaisesMessage(InvalidInputError, 'no data for year 2001, age 61'):
            MortalityTable.from_frame(frame, 'x')

    def test_index_definition_validation(self):
        with self.assertRaises(InvalidInputError):
            IndexDefinition(70, 60, 8, 2000)
        with self.assertRaises(InvalidInputError):
            IndexDefinition(60, 70, 0, 2000)
        self.assertEqual(IndexDefinition(60, 70, 8, 2000).target_year, 2008)


class FitCBDTests(SimpleTestCase):
    def test_exact_recovery_on_logit_linear_rates(self):
        params = fit_cbd(exact_cbd_table())
        t = np.arange(YEARS.size)
        np.testing.assert_allclose(params.theta, -9 + 0.01 * t, rtol=0, atol=1e-10)
        np.testing.assert_allclose(params.tau, 0.1, rtol=0, atol=1e-10)
        self.assertAlmostEqual(params.walk.drift[0], 0.01, delta=1e-10)
        self.assertAlmostEqual(params.walk.drift[1], 0.0, delta=1e-10)

    def test_noisy_drift_within_ten_percent(self):
        t = np.arange(YEARS.size)
        table = table_from_rates(
            cbd_rates(-9 + 0.01 * t, np.full(YEARS.size, 0.1)), exposure=1e7, noise_seed=11
        )
        params = fit_cbd(table)
        self.assertAlmostEqual(params.walk.drift[0], 0.01, delta=0.001)

    def test_constant_rates_have_no_drift(self):
        rates = np.tile(np.linspace(0.01, 0.2, AGES.size), (YEARS.size, 1))
        params = fit_cbd(table_from_rates(rates))
        for drift, sigma in zip(params.walk.drift, params.walk.sigma):
            self.assertAlmostEqual(drift, 0.0, delta=1e-10)
            self.assertLess(sigma, 1e-10)

    def test_rejects_too_few_ages_and_zero_rates(self):
        with self.assertRaises(InvalidInputError):
            fit_cbd(exact_cbd_table().restrict(ages=(60, 61)))
        rates = cbd_rates(np.full(YEARS.size, -9.0), np.full(YEARS.size, 0.1))
        rates[3, 4] = 0.0
        with self.assertRaisesMessage(InvalidInputError, 'year 1993, age 64'):
            fit_cbd(table_from_rates(rates))

    def test_parameters_survive_json_form(self):
        params = fit_cbd(exact_cbd_table())
        restored = params_from_dict(params_to_dict(params))
        np.testing.assert_array_equal(restored.theta, params.theta)
        self.assertEqual(restored.walk, params.walk)


def two_population_tables(kind):
    years = np.arange(1980, 2010)
    ages = np.arange(60, 80)
    t = np.arange(years.size) - 14.5
    shape = np.linspace(1.5, 0.5, ages.size)
    bump = np.exp(-0.5 * ((ages - 70) / 4.0) ** 2)
    common_beta = shape / shape.sum()
    wave = np.cos(2 * np.pi * t / years.size)

    tables = []
    for p, (level, drift) in enumerate(((-6.0, -1.2), (-5.6, -0.9))):
        lam = level + 0.08 * (ages - 60)
        if kind == ModelKind.CAE:
            factors = [(common_beta, drift * t), (bump / bump.sum(), (2 + p) * wave)]
        else:
            own = bump if p == 0 else bump[::-1]
            factors = [(own / own.sum(), (2 + p) * wave), (common_beta, -1.0 * t)]
        rates = factor_rates(lam, factors)
        tables.append(table_from_rates(rates, years, ages, exposure=1e6, population_id=f"pop{p + 1}"))
    return tables


class FitFactorModelTests(SimpleTestCase):
    def test_lee_carter_drift_recovered(self):
        lam = -6 + 0.08 * (AGES - 60)
        beta = np.linspace(2.0, 1.0, AGES.size)
        beta /= beta.sum()
        kappa = -2.0 * (np.arange(YEARS.size) - 9.5)
        table = table_from_rates(factor_rates(lam, [(beta, kappa)]), exposure=1e7, noise_seed=5)

        params = fit_factor_model(table, ModelKind.LEE_CARTER)
        pop = params.population('synthetic')
        self.assertAlmostEqual(pop.walk.drift[0], -2.0, delta=0.1)
        self.assertAlmostEqual(pop.betas[0].sum(), 1.0, delta=1e-8)
        self.assertAlmostEqual(pop.kappas[0].sum(), 0.0, delta=1e-8)

    def test_constant_rates_give_flat_kappa(self):
        rates = np.tile(np.exp(-6 + 0.08 * (AGES - 60)), (YEARS.size, 1))
        params = fit_factor_model([table_from_rates(rates, exposure=1e6)], 'lee_carter')
        np.testing.assert_allclose(params.populations[0].kappas[0], 0.0, atol=1e-8)

    def test_two_population_constraints(self):
        for kind in (ModelKind.LI_LEE, ModelKind.CAE):
            with self.subTest(kind=kind):
                params = fit_factor_model(two_population_tables(kind), kind)
                self.assertEqual(params.population_ids, ('pop1', 'pop2'))
                for pop in params.populations:
                    self.assertEqual(len(pop.betas), 2)
                    for beta, kappa in zip(pop.betas, pop.kappas):
                        self.assertAlmostEqual(beta.sum(), 1.0, delta=1e-8)
                        self.assertAlmostEqual(kappa.sum(), 0.0, delta=1e-8)

    def test_li_lee_common_factor_is_shared(self):
        params = fit_factor_model(two_population_tables(ModelKind.LI_LEE), ModelKind.LI_LEE)
        first, second = params.populations
        np.testing.assert_allclose(first.betas[1], second.betas[1], atol=1e-12)
        np.testing.assert_allclose(first.kappas[1], second.kappas[1], atol=1e-12)

    def test_cae_age_loadings_are_shared(self):
        params = fit_factor_model(two_population_tables(ModelKind.CAE), ModelKind.CAE)
        first, second = params.populations
        for f in range(2):
            np.testing.assert_allclose(first.betas[f], second.betas[f], atol=1e-12)

    def test_identifiability_is_a_fixed_point(self):
        params = fit_factor_model(two_population_tables(ModelKind.LI_LEE), ModelKind.LI_LEE)
        again = apply_identifiability(params)
        for before, after in zip(params.populations, again.populations):
            np.testing.assert_allclose(after.lam, before.lam, atol=1e-10)
            for f in range(2):
                np.testing.assert_allclose(after.betas[f], before.betas[f], atol=1e-10)
                np.testing.assert_allclose(after.kappas[f], before.kappas[f], atol=1e-10)

    def test_table_count_checked(self):
        with self.assertRaises(InvalidInputError):
            fit_factor_model(exact_cbd_table(), ModelKind.LI_LEE)
        with self.assertRaises(InvalidInputError):
            fit_factor_model(exact_cbd_table(), ModelKind.CBD)

    def test_iteration_limit(self):
        with self.assertRaises(NumericalFailure):
            fit_factor_model(two_population_tables(ModelKind.CAE), ModelKind.CAE, tolerance=0.0, max_iter=3)


def decaying_table(c=0.02, years=np.arange(1980, 2010), ages=np.arange(60, 71)):
    base = np.exp(-5 + 0.09 * (ages - 60))
    rates = base[None, :] * np.exp(-c * (years - years[0]))[:, None]
    return table_from_rates(rates, years, ages)


class FitTimeSeriesTests(SimpleTestCase):
    def test_constant_decay_gives_constant_index(self):
        idx = IndexDefinition(60, 70, 8, 2009)
        params = fit_timeseries(decaying_table(0.02), idx, ModelKind.NORMAL)
        np.testing.assert_allclose(params.values, 1 - math.exp(-0.02), rtol=0, atol=1e-12)
        self.assertLess(params.walk.sigma[0], 1e-12)
        self.assertEqual(params.last_year, 2001)

    def test_constant_mortality_gives_zero_index(self):
        years, values = index_series(decaying_table(0.0), 60, 70, 8)
        self.assertEqual(years[-1], 2001)
        np.testing.assert_array_equal(values, 0.0)

    def test_lognormal_rejects_nonpositive_index(self):
        idx = IndexDefinition(60, 70, 8, 2009)
        with self.assertRaisesMessage(InvalidInputError, 'log-normal'):
            fit_timeseries(decaying_table(0.0), idx, ModelKind.LOGNORMAL)

    def test_lognormal_fits_log_series(self):
        idx = IndexDefinition(60, 70, 8, 2009)
        params = fit_timeseries(decaying_table(0.02), idx, ModelKind.LOGNORMAL)
        self.assertAlmostEqual(params.walk.drift[0], 0.0, delta=1e-10)

    def test_needs_five_observations(self):
        table = decaying_table(0.02, years=np.arange(1998, 2010))
        with self.assertRaises(InvalidInputError):
            fit_timeseries(table, IndexDefinition(60, 70, 8, 2009), ModelKind.NORMAL)


class ForecastRandomWalkTests(SimpleTestCase):
    def test_zero_volatility_is_exact(self):
        spec = RandomWalkSpec((0.01,), (0.0,))
        sample = forecast_random_walk(spec, 0.3, 8, 1000, seed=1)
        np.testing.assert_array_equal(sample.values, 0.3 + 8 * 0.01)

    def test_mean_within_clt_bound(self):
        spec = RandomWalkSpec((0.01,), (0.05,))
        sample = forecast_random_walk(spec, 0.0, 8, 100_000, seed=2010)
        bound = 4 * 0.05 * math.sqrt(8) / math.sqrt(100_000)
        self.assertLess(abs(sample.mean - 0.08), bound)

    def test_same_seed_same_draws(self):
        spec = RandomWalkSpec((0.0,), (1.0,))
        first = forecast_random_walk(spec, 0.0, 4, 25_000, seed=9)
        second = forecast_random_walk(spec, 0.0, 4, 25_000, seed=9)
        other = forecast_random_walk(spec, 0.0, 4, 25_000, seed=9, stream='other')
        np.testing.assert_array_equal(first.values, second.values)
        self.assertFalse(np.array_equal(first.values, other.values))

    def test_correlated_pairs(self):
        spec = RandomWalkSpec((0.0, 0.0), (1.0, 2.0), correlation=0.8)
        pairs = forecast_random_walk(spec, (0.0, 0.0), 1, 50_000, seed=4)
        self.assertAlmostEqual(np.corrcoef(pairs.first, pairs.second)[0, 1], 0.8, delta=0.02)
        self.assertAlmostEqual(np.std(pairs.second), 2.0, delta=0.05)

    def test_rejects_bad_arguments(self):
        spec = RandomWalkSpec((0.0,), (1.0,))
        with self.assertRaises(InvalidInputError):
            forecast_random_walk(spec, 0.0, 0, 10, seed=1)
        with self.assertRaises(InvalidInputError):
            forecast_random_walk(spec, (0.0, 1.0), 1, 10, seed=1)
        with self.assertRaises(InvalidInputError):
            forecast_random_walk(spec, 0.0, 1, 0, seed=1)
        with self.assertRaises(InvalidInputError):
            RandomWalkSpec((0.0,), (-1.0,))


def flat_cbd(years=np.arange(2000, 2011), ages=np.arange(60, 71), sigma=(0.0, 0.0)):
    theta = np.full(years.size, -9.0)
    tau = np.full(years.size, 0.1)
    params = CBDParams('flat', years, ages, theta, tau, RandomWalkSpec((0.0, 0.0), sigma))
    table = table_from_rates(cbd_rates(theta, tau, ages), years, ages, population_id='flat')
    return params, table


class SimulateIndexTests(SimpleTestCase):
    def test_unchanged_mortality_gives_zero(self):
        params, table = flat_cbd()
        sample = simulate_index(params, table, IndexDefinition(60, 70, 5, 2005), 500, seed=3)
        np.testing.assert_allclose(sample.values, 0.0, atol=1e-14)

    def test_exponential_decay_closed_form(self):
        c = 0.015
        years = np.arange(2000, 2011)
        ages = np.arange(60, 71)
        lam = -5 + 0.09 * (ages - 60)
        beta = np.full(ages.size, 1.0 / ages.size)
        kappa = -c * ages.size * (years - 2005.0)
        pop = PopulationFactors('decay', lam, [beta], [kappa], RandomWalkSpec((-c * ages.size,), (0.0,)))
        params = FactorParams(ModelKind.LEE_CARTER, years, ages, [pop])
        table = table_from_rates(factor_rates(lam, [(beta, kappa)]), years, ages, population_id='decay')

        sample = simulate_index(params, table, IndexDefinition(60, 70, 8, 2002), 200, seed=3)
        np.testing.assert_allclose(sample.values, 1 - math.exp(-c), rtol=0, atol=1e-10)

    def test_timeseries_forecast_from_last_observation(self):
        table = decaying_table(0.02)
        idx = IndexDefinition(60, 70, 8, 2009)
        params = fit_timeseries(table, idx, ModelKind.NORMAL)
        sample = simulate_index(params, table, idx, 100, seed=1)
        np.testing.assert_allclose(sample.values, 1 - math.exp(-0.02), rtol=0, atol=1e-10)

        with self.assertRaises(InvalidInputError):
            simulate_index(params, table, IndexDefinition(61, 70, 8, 2009), 100, seed=1)
        with self.assertRaisesMessage(InvalidInputError, 'already observed'):
            simulate_index(params, table, IndexDefinition(60, 70, 8, 2000), 100, seed=1)

    def test_age_band_only_changes_the_average(self):
        params, table = flat_cbd(sigma=(0.05, 0.001))
        wide = IndexDefinition(60, 70, 5, 2005)
        narrow = IndexDefinition(62, 66, 5, 2005)
        rates = simulate_rates(params, 'flat', wide, 2000, seed=8, stream='paths')

        draws = index_draws(params, table, narrow, 2000, seed=8, stream='paths')
        base = table.rates_at(2005, narrow.ages)
        expected = 1 - np.mean((rates[:, 2:7] / base) ** (1 / 5), axis=1)
        np.testing.assert_allclose(draws, expected, rtol=1e-12, atol=1e-14)
        np.testing.assert_allclose(improvement_index(rates[:, 2:7], base, 5), expected, rtol=1e-12)

    def test_fit_then_forecast_matches_generating_model(self):
        table = exact_cbd_table()
        params = fit_cbd(table)
        idx = IndexDefinition(65, 75, 8, 2001)
        sample = simulate_index(params, table, idx, 1000, seed=5)

        ages = idx.ages
        t0 = 2001 - 1990
        start = np.logaddexp(0.0, -9 + 0.01 * t0 + 0.1 * ages)
        end = np.logaddexp(0.0, -9 + 0.01 * (t0 + 8) + 0.1 * ages)
        expected = 1 - np.mean((end / start) ** (1 / 8))
        np.testing.assert_allclose(sample.values, expected, rtol=0, atol=1e-8)

    def test_index_stays_below_one(self):
        params, table = flat_cbd(sigma=(0.5, 0.01))
        sample = simulate_index(params, table, IndexDefinition(60, 70, 5, 2005), 20_000, seed=12)
        self.assertTrue(np.all(sample.values < 1.0))
        self.assertTrue(np.all(np.diff(sample.values) >= 0))

    def test_coverage_gaps(self):
        params, table = flat_cbd()
        with self.assertRaises(InvalidInputError):
            simulate_index(params, table, IndexDefinition(55, 70, 5, 2005), 10, seed=1)
        with self.assertRaises(InvalidInputError):
            simulate_index(params, table, IndexDefinition(60, 70, 5, 2015), 10, seed=1)
        other = table_from_rates(table.rates, table.years, table.ages, population_id='other')
        with self.assertRaises(InvalidInputError):
            simulate_index(params, other, IndexDefinition(60, 70, 5, 2005), 10, seed=1)
