import shutil
import tempfile
from dataclasses import replace
from io import StringIO
from pathlib import Path

import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase, override_settings
from django.urls import reverse
from rest_framework import status
from rest_framework.test import APIClient

from copulas.rng import Seed
from copulas.sampling import CopulaSpec, difference, extreme_transform
from crossings.detection import detect_crossings
from crossings.regimes import BoundRegime, CrossingOrder, dispersive_shortcut, regime_holds
from distributions.empirical import Sample, ecdf_eval, quantile
from layers.payoffs import LayerSpec
from longevity_bounds.exceptions import InvalidInputError
from mortality.fitting import fit_cbd
from .loaders import load_mortality_csv, read_config_file
from .models import ScenarioRun
from .outputs import emit_outputs, read_params, read_samples, write_params, write_samples
from .runner import (
    analyze_copula,
    analyze_marginals,
    fit_populations,
    load_populations,
    marginal_checksum,
    run_scenario,
    simulate_populations,
)
from .serializers import ScenarioConfigSerializer

FIXTURES = Path(__file__).resolve().parent / 'fixtures'

REPORT_HEADER = (
    'copula,i_q05,i_q50,i_q95,median_ic,median_icm,d_c,d_cm,d_star,crossings_c,crossings_cm,'
    'order,regime,e_r_i,e_r_ic,e_r_icm,spread,spread_pct_of_max,note'
)


def scenario_data(**overrides):
    data = {
        'name': 'test',
        'population1_id': 'england_wales',
        'population1_data': 'england_wales.csv',
        'population1_model': 'cbd',
        'population1_alpha': '75',
        'population1_omega': '85',
        'population2_id': 'united_states',
        'population2_data': 'united_states.csv',
        'population2_model': 'cbd',
        'population2_alpha': '55',
        'population2_omega': '65',
        'horizon': '8',
        'base_year': '2008',
        'copulas': 'independence, gaussian:0.5, clayton:2',
        'delta': '0.034',
        'epsilon': '0.039',
        'n_sims': '2000',
        'seed': '2010',
    }
    data.update(overrides)
    return data


def build_config(**overrides):
    serializer = ScenarioConfigSerializer(data=scenario_data(**overrides), context={'base_dir': FIXTURES})
    serializer.is_valid(raise_exception=True)
    return serializer.save()


class TempDirMixin:
    def make_dir(self):
        path = Path(tempfile.mkdtemp())
        self.addCleanup(shutil.rmtree, path, ignore_errors=True)
        return path


class LoadMortalityCsvTests(TempDirMixin, SimpleTestCase):
    def write(self, text):
        path = self.make_dir() / 'sample.csv'
        path.write_text(text, encoding='utf-8')
        return path

    def grid_csv(self, exposure_override=None):
        lines = ['year,age,deaths,exposure']
        for year in (2000, 2001, 2002):
            for age in (60, 61, 62):
                exposure = 1000
                if exposure_override and (year, age) == exposure_override[0]:
                    exposure = exposure_override[1]
                lines.append(f"{year},{age},{age - 50},{exposure}")
        return '\n'.join(lines) + '\n'

    def test_well_formed_grid(self):
        table = load_mortality_csv(self.write(self.grid_csv()))
        self.assertEqual(table.shape, (3, 3))
        self.assertEqual(table.population_id, 'sample')
        self.assertEqual(table.deaths[1, 2], 12.0)

    def test_zero_exposure_names_the_line(self):
        path = self.write(self.grid_csv(exposure_override=((2000, 62), 0)))
        with self.assertRaisesMessage(InvalidInputError, 'line 4: exposure must be positive'):
            load_mortality_csv(path)

    def test_rejects_bad_cells(self):
        cases = {
            'year,age,deaths\n2000,60,1\n': 'missing column(s) exposure',
            'year,age,deaths,exposure\n2000,60,x,10\n': "line 2: deaths 'x'",
            'year,age,deaths,exposure\n2000,60,-1,10\n': 'line 2: negative deaths',
            'year,age,deaths,exposure\n2000,60.5,1,10\n': 'line 2: age must be an integer',
            'year,age,deaths,exposure\n2000,60,1,10\n2000,60,2,10\n': 'line 3: year 2000, age 60 appears twice',
            'year,age,deaths,exposure\n2000,60,1,10\n2001,61,1,10\n': 'no data for year 2000, age 61',
        }
        for text, message in cases.items():
            with self.subTest(message=message):
                with self.assertRaisesMessage(InvalidInputError, message):
                    load_mortality_csv(self.write(text))

    def test_missing_file(self):
        with self.assertRaises(InvalidInputError):
            load_mortality_csv(FIXTURES / 'missing.csv')

    def test_bundled_fixture_fits(self):
        table = load_mortality_csv(FIXTURES / 'england_wales.csv')
        self.assertEqual(table.shape, (60, 71))
        self.assertEqual((table.years[0], table.years[-1]), (1950, 2009))
        params = fit_cbd(table)
        self.assertLess(params.walk.drift[0], 0.0)


class ReadConfigFileTests(TempDirMixin, SimpleTestCase):
    def write(self, text):
        path = self.make_dir() / 'scenario.cfg'
        path.write_text(text, encoding='utf-8')
        return path

    def test_skips_comments_and_blank_lines(self):
        values = read_config_file(self.write('# header\n\nname = kortis\n  delta=0.034  \n'))
        self.assertEqual(values, {'name': 'kortis', 'delta': '0.034'})

    def test_line_numbered_errors(self):
        with self.assertRaisesMessage(InvalidInputError, 'line 2'):
            read_config_file(self.write('name = a\nnot a setting\n'))
        with self.assertRaisesMessage(InvalidInputError, "line 3: key 'name' is set twice"):
            read_config_file(self.write('name = a\n\nname = b\n'))

    def test_bundled_scenario_is_valid(self):
        data = read_config_file(FIXTURES / 'kortis.cfg')
        serializer = ScenarioConfigSerializer(data=data, context={'base_dir': FIXTURES})
        self.assertTrue(serializer.is_valid(), serializer.errors)
        config = serializer.save()
        self.assertEqual(len(config.copulas), 7)
        self.assertEqual(config.layer.delta, 0.034)
        self.assertEqual(config.populations[1].index.ages[0], 55)


class ScenarioConfigSerializerTests(SimpleTestCase):
    def validate(self, **overrides):
        serializer = ScenarioConfigSerializer(data=scenario_data(**overrides), context={'base_dir': FIXTURES})
        return serializer.is_valid(), serializer

    def test_defaults_come_from_settings(self):
        with override_settings(BOUNDS_SWEEP_WIDTH=0.01, BOUNDS_ORDER_BAND=0.002):
            config = build_config()
        self.assertEqual(config.sweep_width, 0.01)
        self.assertEqual(config.order_band, 0.002)
        self.assertIsNone(config.band)
        self.assertEqual(config.fit_years, (1950, 2009))
        self.assertEqual(config.populations[0].data_path, FIXTURES / 'england_wales.csv')
        self.assertEqual(config.copulas[1], CopulaSpec('gaussian', 0.5))

    def test_default_copula_grid(self):
        data = scenario_data()
        del data['copulas']
        serializer = ScenarioConfigSerializer(data=data, context={'base_dir': FIXTURES})
        self.assertTrue(serializer.is_valid(), serializer.errors)
        labels = [spec.label for spec in serializer.save().copulas]
        self.assertEqual(labels[0], 'independence')
        self.assertEqual(labels[-1], 'clayton_6')

    def test_population_id_defaults_to_file_stem(self):
        data = scenario_data()
        del data['population1_id']
        serializer = ScenarioConfigSerializer(data=data, context={'base_dir': FIXTURES})
        self.assertTrue(serializer.is_valid(), serializer.errors)
        self.assertEqual(serializer.save().populations[0].population_id, 'england_wales')

    def test_rejections(self):
        cases = {
            'epsilon': {'epsilon': '0.02'},
            'copulas': {'copulas': 'gaussian:2'},
            'population1_data': {'population1_data': 'missing.csv'},
            'population2_model': {'population1_model': 'li_lee'},
            'population2_id': {'population2_id': 'england_wales'},
            'population1_alpha': {'population1_alpha': '20'},
            'base_year': {'base_year': '2015'},
            'seed': {'seed': '-1'},
            'spread_quantile': {'spread_quantile': '1.5'},
        }
        for field, overrides in cases.items():
            with self.subTest(field=field):
                valid, serializer = self.validate(**overrides)
                self.assertFalse(valid)
                self.assertIn(field, serializer.errors)

    def test_unknown_and_duplicate_settings(self):
        valid, serializer = self.validate(sims='10')
        self.assertFalse(valid)
        self.assertIn('sims', str(serializer.errors))
        valid, serializer = self.validate(copulas='clayton:2, clayton:2')
        self.assertFalse(valid)


class RunScenarioTests(TempDirMixin, SimpleTestCase):
    def test_rows_per_copula(self):
        config = build_config(output_dir=str(self.make_dir()))
        report = run_scenario(config)

        self.assertEqual([row.copula for row in report.rows], ['independence', 'gaussian_0.5', 'clayton_2'])
        self.assertEqual(report.checksum, marginal_checksum(*report.marginals))
        for row in report.rows:
            self.assertTrue(row.quantiles[0] <= row.median <= row.quantiles[2])
            self.assertIn(row.regime, BoundRegime.values)
            self.assertIn(row.order, CrossingOrder.values + [''])
            self.assertTrue(0.0 <= row.e_payoff <= config.layer.principal)
            self.assertAlmostEqual(row.spread, row.e_payoff_cm - row.e_payoff_c)
            self.assertTrue(regime_holds(row.regime, row.e_payoff, row.e_payoff_c, row.e_payoff_cm), row)
            if row.regime == BoundRegime.PRESERVED:
                self.assertTrue(row.bounds_hold, row)

    def test_identical_populations_have_degenerate_comonotone_difference(self):
        config = build_config(
            population2_id='twin',
            population2_data='england_wales.csv',
            population2_alpha='75',
            population2_omega='85',
            copulas='comonotone, countermonotone',
            delta='0.01',
            epsilon='0.02',
        )
        report = run_scenario(config)
        s1, s2 = report.marginals
        np.testing.assert_array_equal(s1.values, s2.values)
        np.testing.assert_array_equal(report.sample_c.values, 0.0)

        comonotone = report.rows[0]
        self.assertEqual(comonotone.quantiles, (0.0, 0.0, 0.0))
        self.assertEqual(comonotone.e_payoff, 0.0)
        self.assertEqual(comonotone.e_payoff_c, 0.0)

    def test_two_population_model_is_fitted_once(self):
        config = build_config(population1_model='li_lee', population2_model='li_lee')
        first, second = fit_populations(config, load_populations(config))
        self.assertIs(first, second)
        self.assertEqual(first.population_ids, ('england_wales', 'united_states'))

    def test_errors_carry_scenario_name(self):
        config = build_config()
        missing = replace(config.populations[0], data_path=FIXTURES / 'missing.csv')
        config = replace(config, populations=(missing, config.populations[1]))
        with self.assertRaisesMessage(InvalidInputError, "Scenario 'test'"):
            run_scenario(config)

    def test_sweep_and_spread_bars(self):
        config = build_config()
        report = run_scenario(config)

        self.assertEqual(len(report.sweep), 301)
        self.assertEqual(report.sweep[0]['delta'], -0.15)
        self.assertEqual(report.sweep[150]['delta'], 0.0)
        self.assertEqual(report.sweep[-1]['epsilon'], 0.155)
        upper = max(report.sample_cm.upper, *(s.upper for s in report.differences.values()))
        for point in report.sweep:
            if point['delta'] > upper:
                self.assertEqual(point['e_r_icm'], 0.0)
                self.assertEqual(point['e_r_clayton_2'], 0.0)

        anchors = [bar['anchor'] for bar in report.spread_bars]
        self.assertEqual(anchors, ['comonotone', 'independence', 'countermonotone'])
        self.assertEqual(report.spread_bars[0]['delta'], quantile(report.sample_c, 0.95))
        for bar in report.spread_bars:
            self.assertTrue(-100.0 <= bar['spread_pct_of_max'] <= 100.0)

    def test_sweep_curves_cross_at_d_star(self):
        config = build_config()
        report = run_scenario(config)
        self.assertEqual(report.crossings_star, 1)
        d_star = report.d_star
        tol = config.sweep_width * 2.0 / config.n_sims + 1e-12

        below = above = 0
        for point in report.sweep:
            gap = point['e_r_icm'] - point['e_r_ic']
            if point['delta'] >= d_star:
                self.assertGreaterEqual(gap, -tol, point)
            if point['epsilon'] <= d_star:
                self.assertLessEqual(gap, tol, point)
            below += gap < -tol
            above += gap > tol
        self.assertGreater(below, 0)
        self.assertGreater(above, 0)

    def test_spread_vanishes_beyond_upper_quantiles(self):
        config = build_config()
        report = run_scenario(config)
        principal = config.sweep_principal or config.sweep_width
        q95 = max(quantile(report.sample_cm, 0.95), quantile(report.sample_c, 0.95))
        top = max(report.sample_cm.upper, report.sample_c.upper)

        checked = 0
        for point in report.sweep:
            if point['delta'] < q95:
                continue
            spread_pct = 100.0 * (point['e_r_icm'] - point['e_r_ic']) / principal
            tail = max(1.0 - ecdf_eval(report.sample_cm, point['delta']),
                       1.0 - ecdf_eval(report.sample_c, point['delta']))
            self.assertLessEqual(abs(spread_pct), 100.0 * tail + 1e-6, point)
            self.assertLessEqual(abs(spread_pct), 5.0 + 1e-6, point)
            if point['delta'] >= top:
                self.assertEqual(spread_pct, 0.0)
            checked += 1
        self.assertGreater(checked, 10)

    def test_preserved_regime_always_brackets(self):
        rng = np.random.default_rng(7)
        s1, s2 = Sample(rng.normal(0.0, 1.0, 400)), Sample(rng.normal(0.0, 0.5, 400))
        config = replace(
            build_config(), band=0.9, layer=LayerSpec(-1.5, -1.0), copulas=(CopulaSpec('independence'),),
        )
        with self.assertLogs('scenarios.runner', level='WARNING'):
            row = analyze_marginals(config, s1, s2).rows[0]
        self.assertNotEqual(row.regime, BoundRegime.PRESERVED)
        self.assertTrue(row.note)
        self.assertTrue(regime_holds(row.regime, row.e_payoff, row.e_payoff_c, row.e_payoff_cm))

    def test_misoriented_extremes_leave_a_note(self):
        rng = np.random.default_rng(8)
        s1, s2 = Sample(rng.normal(0.0, 1.0, 2000)), Sample(rng.normal(0.0, 0.5, 2000))
        config = build_config(delta='0.5', epsilon='1.0')
        sample_c = difference(extreme_transform(s1, s2, 'comonotone'))
        sample_cm = difference(extreme_transform(s1, s2, 'countermonotone'))
        cs_star = detect_crossings(sample_c, sample_cm)
        row, _ = analyze_copula(
            s1, s2, CopulaSpec('independence'), sample_cm, sample_c, cs_star, config, Seed(config.seed),
        )
        self.assertEqual(row.regime, BoundRegime.AMBIGUOUS)
        self.assertIn('contradicts the CDFs', row.note)


class KortisRegimeTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        data = read_config_file(FIXTURES / 'kortis.cfg')
        data['n_sims'] = '20000'
        serializer = ScenarioConfigSerializer(data=data, context={'base_dir': FIXTURES})
        serializer.is_valid(raise_exception=True)
        cls.config = serializer.save()

    def test_layer_above_every_crossing_is_preserved(self):
        report = run_scenario(self.config)
        layer = self.config.layer
        qualifying = 0
        for row in report.rows:
            sample = report.differences[row.copula]
            cs_c = detect_crossings(report.sample_c, sample, band=self.config.band)
            cs_cm = detect_crossings(sample, report.sample_cm, band=self.config.band)
            if max(cs_c.points + cs_cm.points, default=-np.inf) >= layer.delta:
                continue
            qualifying += 1
            self.assertEqual(row.regime, BoundRegime.PRESERVED, row.copula)
            self.assertTrue(row.bounds_hold, row.copula)
            self.assertTrue(row.e_payoff_c <= row.e_payoff <= row.e_payoff_cm)
        self.assertGreater(qualifying, 0)

    def test_lognormal_clayton_is_only_partly_certified(self):
        config = replace(
            self.config,
            populations=tuple(replace(p, model='lognormal') for p in self.config.populations),
            copulas=(CopulaSpec('clayton', 2.0),),
        )
        report = run_scenario(config)
        sample = report.differences['clayton_2']
        cs_c = detect_crossings(report.sample_c, sample, band=config.band)
        self.assertGreater(cs_c.n_crossings, 0)

        d = cs_c.points[-1]
        straddling = replace(config, layer=LayerSpec(d - 0.001, d + 0.001))
        row = analyze_marginals(straddling, *report.marginals).rows[0]
        self.assertIn(row.regime, (
            BoundRegime.ONLY_CM_UPPER, BoundRegime.ONLY_C_UPPER,
            BoundRegime.ONLY_CM_LOWER, BoundRegime.ONLY_C_LOWER, BoundRegime.AMBIGUOUS,
        ))
        self.assertTrue(regime_holds(row.regime, row.e_payoff, row.e_payoff_c, row.e_payoff_cm))


class CrossingTrichotomyTests(SimpleTestCase):
    """Unique crossings of I, I^c and I^cm never come out of order."""

    KINDS = ('cbd', 'lee_carter', 'li_lee', 'cae', 'normal', 'lognormal')

    def test_no_violation_for_simulated_indices(self):
        complete = 0
        for kind in self.KINDS:
            data = scenario_data(
                population1_model=kind, population2_model=kind, n_sims='100000',
                fit_start_year='1970', fit_min_age='50', fit_max_age='90',
            )
            del data['copulas']
            serializer = ScenarioConfigSerializer(data=data, context={'base_dir': FIXTURES})
            serializer.is_valid(raise_exception=True)
            config = serializer.save()
            self.assertEqual(len(config.copulas), 7)

            tables = load_populations(config)
            s1, s2 = simulate_populations(config, tables, fit_populations(config, tables))
            report = analyze_marginals(config, s1, s2)
            for row in report.rows:
                with self.subTest(kind=kind, copula=row.copula):
                    if row.order:
                        complete += 1
                        self.assertNotEqual(row.order, CrossingOrder.VIOLATION)

            shortcut = dispersive_shortcut(s1, s2)
            if shortcut is None:
                continue
            with self.subTest(kind=kind):
                self.assertAlmostEqual(ecdf_eval(report.sample_c, shortcut), 0.5, delta=0.01)
                self.assertAlmostEqual(ecdf_eval(report.sample_cm, shortcut), 0.5, delta=0.01)
                if report.d_star is not None:
                    self.assertAlmostEqual(ecdf_eval(report.sample_c, report.d_star), 0.5, delta=0.01)
                    self.assertAlmostEqual(ecdf_eval(report.sample_cm, report.d_star), 0.5, delta=0.01)
        self.assertGreater(complete, 0)


class OutputTests(TempDirMixin, SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.config = build_config()
        cls.report = run_scenario(cls.config)

    def test_four_kinds_of_files(self):
        out = self.make_dir()
        paths = emit_outputs(self.report, out)
        names = sorted(path.name for path in paths)
        self.assertEqual(names, [
            'cdf_clayton_2.csv',
            'cdf_gaussian_0.5.csv',
            'cdf_independence.csv',
            'payoff_sweep.csv',
            'report.csv',
            'spread_bars.csv',
        ])

        def header(name):
            return (out / name).read_text(encoding='utf-8').splitlines()[0]

        self.assertEqual(header('report.csv'), REPORT_HEADER)
        self.assertEqual(header('cdf_independence.csv'), 'x,f_i,f_ic,f_icm')
        self.assertEqual(
            header('payoff_sweep.csv'),
            'delta,epsilon,e_r_ic,e_r_icm,e_r_independence,e_r_gaussian_0.5,e_r_clayton_2',
        )
        self.assertEqual(
            header('spread_bars.csv'),
            'anchor,quantile,delta,epsilon,e_r_icm,e_r_ic,spread,spread_pct_of_max',
        )
        self.assertEqual(len((out / 'cdf_independence.csv').read_text().splitlines()), 502)
        self.assertEqual(len((out / 'report.csv').read_text().splitlines()), 4)

    def test_analysis_is_deterministic(self):
        s1, s2 = self.report.marginals
        first, second = self.make_dir(), self.make_dir()
        emit_outputs(analyze_marginals(self.config, s1, s2), first)
        emit_outputs(analyze_marginals(self.config, s1, s2), second)
        for path in sorted(first.iterdir()):
            with self.subTest(file=path.name):
                self.assertEqual(path.read_bytes(), (second / path.name).read_bytes())

    def test_sample_file_keeps_full_precision(self):
        path = self.make_dir() / 'samples.csv'
        write_samples(path, *self.report.marginals)
        s1, s2 = read_samples(path)
        np.testing.assert_array_equal(s1.values, self.report.marginals[0].values)
        np.testing.assert_array_equal(s2.values, self.report.marginals[1].values)

    def test_params_file(self):
        out = self.make_dir()
        params = fit_populations(self.config, load_populations(self.config))
        restored = read_params(write_params(out / 'params.json', params))
        self.assertEqual([p.kind for p in restored], ['cbd', 'cbd'])
        np.testing.assert_array_equal(restored[0].theta, params[0].theta)

        (out / 'broken.json').write_text('[{"model": "cbd"}, {"model": "cbd"}]', encoding='utf-8')
        with self.assertRaisesMessage(InvalidInputError, 'Malformed model parameters'):
            read_params(out / 'broken.json')


class CommandTests(TempDirMixin, TestCase):
    def setUp(self):
        self.root = self.make_dir()

    def write_config(self, name='scenario.cfg', **overrides):
        data = scenario_data(
            population1_data=str(FIXTURES / 'england_wales.csv'),
            population2_data=str(FIXTURES / 'united_states.csv'),
            output_dir=str(self.root / 'out'),
        )
        data.update(overrides)
        path = self.root / name
        path.write_text(''.join(f"{key} = {value}\n" for key, value in data.items()), encoding='utf-8')
        return path

    def call(self, *args):
        call_command(*args, stdout=StringIO())

    def test_run_writes_outputs_and_history(self):
        self.call('run', '--config', str(self.write_config()))
        out = self.root / 'out'
        for name in ('report.csv', 'payoff_sweep.csv', 'spread_bars.csv', 'samples.csv', 'cdf_clayton_2.csv'):
            self.assertTrue((out / name).is_file(), name)

        run = ScenarioRun.objects.get()
        self.assertEqual(run.status, 'succeeded')
        self.assertEqual(run.seed, '2010')
        self.assertEqual(run.n_copulas, 3)
        self.assertEqual(len(run.sample_checksum), 64)
        self.assertTrue(run.is_finished)

    def test_flags_override_the_scenario_file(self):
        other = self.root / 'other'
        self.call('run', '--config', str(self.write_config()), '--seed', '7', '--sims', '1000', '--out', str(other))
        run = ScenarioRun.objects.get()
        self.assertEqual((run.seed, run.n_sims), ('7', 1000))
        s1, _ = read_samples(other / 'samples.csv')
        self.assertEqual(s1.n, 1000)

    def test_step_by_step_pipeline_matches_run(self):
        config = str(self.write_config())
        staged = self.root / 'staged'
        self.call('run', '--config', config)
        self.call('fit', '--config', config, '--out', str(staged))
        self.call('simulate', '--config', config, '--out', str(staged))
        self.call('analyze', '--config', config, '--out', str(staged))
        self.call('sweep', '--config', config, '--out', str(staged))
        for name in ('samples.csv', 'report.csv', 'cdf_gaussian_0.5.csv', 'payoff_sweep.csv', 'spread_bars.csv'):
            with self.subTest(file=name):
                self.assertEqual((staged / name).read_bytes(), (self.root / 'out' / name).read_bytes())

    def test_run_twice_is_byte_identical(self):
        config = str(self.write_config())
        first, second = self.root / 'first', self.root / 'second'
        self.call('run', '--config', config, '--out', str(first))
        self.call('run', '--config', config, '--out', str(second))
        for path in sorted(first.iterdir()):
            with self.subTest(file=path.name):
                self.assertEqual(path.read_bytes(), (second / path.name).read_bytes())

    def test_invalid_input_exits_with_2(self):
        with self.assertRaises(CommandError) as ctx:
            self.call('run', '--config', str(self.write_config(epsilon='0.01')))
        self.assertEqual(ctx.exception.returncode, 2)

        with self.assertRaises(CommandError) as ctx:
            self.call('fit', '--config', str(self.root / 'missing.cfg'))
        self.assertEqual(ctx.exception.returncode, 2)

        with self.assertRaises(CommandError) as ctx:
            self.call('analyze', '--config', str(self.write_config()), '--samples', str(self.root / 'none.csv'))
        self.assertEqual(ctx.exception.returncode, 2)
        self.assertFalse(ScenarioRun.objects.exists())

    @override_settings(BOUNDS_MLE_MAX_ITER=1)
    def test_non_convergence_exits_with_3(self):
        config = str(self.write_config(population1_model='lee_carter', population2_model='lee_carter'))
        with self.assertRaises(CommandError) as ctx:
            self.call('fit', '--config', config)
        self.assertEqual(ctx.exception.returncode, 3)

        with self.assertRaises(CommandError) as ctx:
            self.call('run', '--config', config)
        self.assertEqual(ctx.exception.returncode, 3)
        run = ScenarioRun.objects.get()
        self.assertEqual(run.status, 'failed')
        self.assertIn('did not converge', run.error_message)


class ScenarioRunApiTests(TestCase):
    def setUp(self):
        self.client = APIClient()
        ScenarioRun.objects.create(
            name='kortis', config_path='kortis.cfg', seed='2010', n_sims=100000,
            status='succeeded', report={'rows': [{'copula': 'independence'}, {'copula': 'clayton_2'}]},
        )
        ScenarioRun.objects.create(
            name='kortis', config_path='kortis.cfg', seed='7', n_sims=1000,
            status='failed', error_message='Scenario failed',
        )

    def test_list_and_filter(self):
        url = reverse('scenarios:scenario-run-list')
        response = self.client.get(url)
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(response.data['count'], 2)

        response = self.client.get(url, {'status': 'failed'})
        self.assertEqual(response.data['count'], 1)
        self.assertEqual(response.data['results'][0]['seed'], '7')

    def test_detail(self):
        run = ScenarioRun.objects.get(seed='2010')
        response = self.client.get(reverse('scenarios:scenario-run-detail', args=[run.pk]))
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(response.data['n_copulas'], 2)
        self.assertEqual(response.data['status_display'], 'Succeeded')

    def test_read_only(self):
        response = self.client.post(reverse('scenarios:scenario-run-list'), {'name': 'x'})
        self.assertEqual(response.status_code, status.HTTP_405_METHOD_NOT_ALLOWED)
