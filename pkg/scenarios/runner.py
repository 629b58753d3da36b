"""
End-to-end scenario pipeline: fit -> simulate -> reorder -> analyze.

The two marginal index samples are simulated once. Every copula then only
re-pairs the same draws, so differences between copula rows come from the
dependence structure alone.
"""
import hashlib
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from copulas.rng import Seed
from copulas.sampling import CopulaKind, CopulaSpec, difference, extreme_transform, reorder
from crossings.detection import detect_crossings
from crossings.regimes import BoundRegime, CrossingTriple, bound_regime, crossing_order, regime_holds
from distributions.empirical import quantile
from layers.payoffs import LayerSpec, expected_layer_payoff, layer_payoff_curve, uncertainty_spread
from longevity_bounds.exceptions import BoundsEngineError, InvalidInputError, NumericalFailure
from mortality.fitting import fit_cbd, fit_factor_model, fit_timeseries
from mortality.params import FACTOR_KINDS, TWO_POPULATION_KINDS, TIME_SERIES_KINDS, ModelKind
from mortality.simulation import simulate_index
from .loaders import load_mortality_csv

logger = logging.getLogger(__name__)

DEFAULT_COPULAS = (
    'independence',
    'gaussian:-0.5',
    'gaussian:0',
    'gaussian:0.5',
    'clayton:2',
    'clayton:4',
    'clayton:6',
)

REPORT_QUANTILES = (0.05, 0.5, 0.95)

MARGINAL_STREAM = 'marginal_index'


@dataclass(frozen=True)
class PopulationConfig:
    population_id: str
    data_path: Path
    model: str
    index: object


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario; built by ``ScenarioConfigSerializer``."""
    name: str
    populations: tuple
    copulas: tuple
    layer: LayerSpec
    n_sims: int
    seed: int
    output_dir: Path
    fit_years: tuple
    fit_ages: tuple
    sweep_min: float
    sweep_max: float
    sweep_step: float
    sweep_width: float
    spread_quantile: float
    order_band: float
    band: float = None
    sweep_principal: float = None

    @property
    def deltas(self):
        count = int(np.floor((self.sweep_max - self.sweep_min) / self.sweep_step + 1e-9)) + 1
        return np.round(self.sweep_min + self.sweep_step * np.arange(count), 12)


@dataclass(frozen=True)
class CopulaRow:
    copula: str
    quantiles: tuple
    d_c: float
    d_cm: float
    d_star: float
    crossings_c: int
    crossings_cm: int
    order: str
    regime: str
    e_payoff: float
    e_payoff_c: float
    e_payoff_cm: float
    spread: float
    spread_pct_of_max: float
    note: str = ''

    @property
    def median(self):
        return self.quantiles[REPORT_QUANTILES.index(0.5)]

    @property
    def bounds_hold(self):
        """Whether the extreme payoffs bracket E[r(I)] on these samples"""
        return self.e_payoff_c <= self.e_payoff <= self.e_payoff_cm


@dataclass(eq=False)
class ScenarioReport:
    config: ScenarioConfig
    marginals: tuple
    sample_c: object
    sample_cm: object
    d_star: float
    crossings_star: int
    checksum: str
    rows: list = field(default_factory=list)
    differences: dict = field(default_factory=dict)
    sweep: list = field(default_factory=list)
    spread_bars: list = field(default_factory=list)

    def summary(self):
        """JSON-friendly digest stored with the run history"""
        return {
            'd_star': self.d_star,
            'median_c': float(quantile(self.sample_c, 0.5)),
            'median_cm': float(quantile(self.sample_cm, 0.5)),
            'checksum': self.checksum,
            'rows': [
                {
                    'copula': row.copula,
                    'median': row.median,
                    'd_c': row.d_c,
                    'd_cm': row.d_cm,
                    'order': row.order,
                    'regime': row.regime,
                    'spread': row.spread,
                    'note': row.note,
                }
                for row in self.rows
            ],
        }


def marginal_checksum(s1, s2):
    digest = hashlib.sha256()
    digest.update(s1.values.tobytes())
    digest.update(s2.values.tobytes())
    return digest.hexdigest()


def load_populations(config):
    tables = []
    for population in config.populations:
        table = load_mortality_csv(population.data_path, population.population_id)
        tables.append(table.restrict(years=config.fit_years, ages=config.fit_ages))
    return tuple(tables)


def fit_population(table, population, partner_table=None):
    kind = ModelKind(population.model)
    if kind == ModelKind.CBD:
        return fit_cbd(table)
    if kind in TWO_POPULATION_KINDS:
        return fit_factor_model([table, partner_table], kind)
    if kind in FACTOR_KINDS:
        return fit_factor_model(table, kind)
    if kind in TIME_SERIES_KINDS:
        return fit_timeseries(table, population.index, kind)
    raise InvalidInputError(f"Unknown model kind '{population.model}'")


def fit_populations(config, tables):
    """Fitted parameters per population; two-population models are fitted jointly once."""
    first, second = config.populations
    if first.model == second.model and first.model in TWO_POPULATION_KINDS:
        joint = fit_population(tables[0], first, partner_table=tables[1])
        return joint, joint
    return tuple(
        fit_population(table, population)
        for table, population in zip(tables, config.populations)
    )


def simulate_populations(config, tables, params, workers=None):
    """
    One sorted index sample per population. Both populations draw from the
    same stream; only their sorted marginals are used afterwards, so equal
    inputs give equal samples.
    """
    seed = Seed(config.seed)
    return tuple(
        simulate_index(
            fitted, table, population.index, config.n_sims, seed,
            stream=MARGINAL_STREAM, workers=workers,
        )
        for fitted, table, population in zip(params, tables, config.populations)
    )


def _reordered(s1, s2, spec, seed, workers):
    return difference(reorder(s1, s2, spec, seed, workers=workers))


def _optional(value):
    return None if value is None else float(value)


def _regime(cs_c, cs_cm, layer):
    """Bound regime, or ambiguous with the reason when the crossing sets rule one out."""
    try:
        return bound_regime(cs_c, cs_cm, layer), ''
    except InvalidInputError as exc:
        return BoundRegime.AMBIGUOUS, str(exc)


def checked_regime(sample_c, sample, sample_cm, cs_c, cs_cm, layer, e_payoff, e_payoff_c, e_payoff_cm):
    """
    Regime whose claimed sides agree with the expected payoffs. A banded
    regime that the payoffs contradict is recomputed without a band, and
    dropped to ambiguous if that still disagrees.
    """
    payoffs = (e_payoff, e_payoff_c, e_payoff_cm)
    regime, note = _regime(cs_c, cs_cm, layer)
    if regime_holds(regime, *payoffs):
        return regime, note

    strict, strict_note = _regime(
        detect_crossings(sample_c, sample, band=0.0),
        detect_crossings(sample, sample_cm, band=0.0),
        layer,
    )
    if regime_holds(strict, *payoffs):
        return strict, f"banded regime {regime} contradicted by payoffs; recomputed without band"
    return BoundRegime.AMBIGUOUS, strict_note or f"regime {regime} contradicted by payoffs"


def analyze_copula(s1, s2, spec, sample_c, sample_cm, cs_star, config, seed, workers=None):
    sample = _reordered(s1, s2, spec, seed, workers)
    cs_c = detect_crossings(sample_c, sample, band=config.band)
    cs_cm = detect_crossings(sample, sample_cm, band=config.band)
    triple = CrossingTriple.from_sets(cs_c, cs_cm, cs_star)
    order = crossing_order(triple, band=config.order_band) if triple.is_complete else ''
    spread = uncertainty_spread(sample_cm, sample_c, config.layer)
    e_payoff = expected_layer_payoff(sample, config.layer)
    regime, note = checked_regime(
        sample_c, sample, sample_cm, cs_c, cs_cm, config.layer, e_payoff, spread.e_c, spread.e_cm,
    )
    if note:
        logger.warning(f"{spec.label}: {note}")

    row = CopulaRow(
        copula=spec.label,
        quantiles=tuple(float(quantile(sample, p)) for p in REPORT_QUANTILES),
        d_c=_optional(triple.d_c),
        d_cm=_optional(triple.d_cm),
        d_star=_optional(triple.d_star),
        crossings_c=cs_c.n_crossings,
        crossings_cm=cs_cm.n_crossings,
        order=str(order),
        regime=str(regime),
        e_payoff=e_payoff,
        e_payoff_c=spread.e_c,
        e_payoff_cm=spread.e_cm,
        spread=spread.spread,
        spread_pct_of_max=spread.spread_pct_of_max,
        note=note,
    )
    logger.info(
        f"{spec.label}: median {row.median:.6f}, d_c={row.d_c}, d_cm={row.d_cm}, regime {row.regime}"
    )
    return row, sample


def payoff_sweep(config, sample_c, sample_cm, differences):
    """Expected payoffs of layers [delta, delta + width] across the sweep range"""
    deltas = config.deltas
    width = config.sweep_width
    principal = config.sweep_principal
    columns = {
        'delta': deltas,
        'epsilon': np.round(deltas + width, 12),
        'e_r_ic': layer_payoff_curve(sample_c, deltas, width, principal),
        'e_r_icm': layer_payoff_curve(sample_cm, deltas, width, principal),
    }
    for label, sample in differences.items():
        columns[f"e_r_{label}"] = layer_payoff_curve(sample, deltas, width, principal)
    return [
        {name: float(values[k]) for name, values in columns.items()}
        for k in range(deltas.size)
    ]


def spread_bars(config, sample_c, sample_cm, anchors):
    """Spread of layers attached at the configured quantile of each anchor sample"""
    bars = []
    for anchor, sample in anchors.items():
        delta = float(quantile(sample, config.spread_quantile))
        layer = LayerSpec(delta, delta + config.sweep_width, config.sweep_principal)
        spread = uncertainty_spread(sample_cm, sample_c, layer)
        bars.append({
            'anchor': anchor,
            'quantile': config.spread_quantile,
            'delta': layer.delta,
            'epsilon': layer.epsilon,
            'e_r_icm': spread.e_cm,
            'e_r_ic': spread.e_c,
            'spread': spread.spread,
            'spread_pct_of_max': spread.spread_pct_of_max,
        })
    return bars


def analyze_marginals(config, s1, s2, workers=None):
    """Crossing analysis and layer expectations for every configured copula"""
    if s1.n != s2.n:
        raise InvalidInputError(f"Marginal samples differ in size: {s1.n} and {s2.n}")
    seed = Seed(config.seed)
    checksum = marginal_checksum(s1, s2)

    sample_c = difference(extreme_transform(s1, s2, CopulaKind.COMONOTONE))
    sample_cm = difference(extreme_transform(s1, s2, CopulaKind.COUNTERMONOTONE))
    cs_star = detect_crossings(sample_c, sample_cm, band=config.band)

    report = ScenarioReport(
        config=config,
        marginals=(s1, s2),
        sample_c=sample_c,
        sample_cm=sample_cm,
        d_star=_optional(cs_star.unique_point),
        crossings_star=cs_star.n_crossings,
        checksum=checksum,
    )
    for spec in config.copulas:
        row, sample = analyze_copula(s1, s2, spec, sample_c, sample_cm, cs_star, config, seed, workers)
        if marginal_checksum(s1, s2) != checksum:
            raise NumericalFailure(f"Marginal samples changed while analyzing {spec.label}")
        report.rows.append(row)
        report.differences[spec.label] = sample

    independence = CopulaSpec(CopulaKind.INDEPENDENCE)
    if independence.label not in report.differences:
        sample_indep = _reordered(s1, s2, independence, seed, workers)
    else:
        sample_indep = report.differences[independence.label]
    report.sweep = payoff_sweep(config, sample_c, sample_cm, report.differences)
    report.spread_bars = spread_bars(config, sample_c, sample_cm, {
        CopulaKind.COMONOTONE.value: sample_c,
        CopulaKind.INDEPENDENCE.value: sample_indep,
        CopulaKind.COUNTERMONOTONE.value: sample_cm,
    })
    return report


def run_scenario(config, workers=None):
    logger.info(f"Running scenario '{config.name}' with {config.n_sims} simulations, seed {config.seed}")
    try:
        tables = load_populations(config)
        params = fit_populations(config, tables)
        s1, s2 = simulate_populations(config, tables, params, workers=workers)
        report = analyze_marginals(config, s1, s2, workers=workers)
    except BoundsEngineError as exc:
        logger.error(f"Scenario '{config.name}' failed: {exc}")
        raise type(exc)(f"Scenario '{config.name}': {exc}") from exc
    logger.info(f"Scenario '{config.name}' analyzed {len(report.rows)} copulas")
    return report
