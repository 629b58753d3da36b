"""
Random-walk forecasts and simulated mortality-improvement indices.

Only the marginal of each population is simulated here; dependence between
the two indices is imposed later by rank reordering.
"""
import logging
import math

import numpy as np

from copulas.rng import Seed, standard_normals
from copulas.sampling import PairedSample
from distributions.empirical import Sample
from longevity_bounds.exceptions import InvalidInputError, NumericalFailure
from .params import CBDParams, FactorParams, ModelKind, TimeSeriesParams
from .tables import base_rates, improvement_index

logger = logging.getLogger(__name__)


def _as_seed(seed):
    return seed if isinstance(seed, Seed) else Seed(seed)


def _check_horizon(horizon):
    if isinstance(horizon, bool) or int(horizon) != horizon or horizon < 1:
        raise InvalidInputError(f"Forecast horizon must be a positive integer, got {horizon!r}")
    return int(horizon)


def terminal_values(spec, start, horizon, n, seed, stream='random_walk', workers=None):
    """
    Terminal values (n x dim) of the walk after ``horizon`` years.

    The sum of ``horizon`` Gaussian increments is drawn in one step as
    start + T * drift + sigma * sqrt(T) * Z, with Z correlated across
    dimensions through ``spec.correlation``.
    """
    horizon = _check_horizon(horizon)
    start = np.atleast_1d(np.asarray(start, dtype=float))
    if start.shape != (spec.dim,) or not np.all(np.isfinite(start)):
        raise InvalidInputError(f"Random walk start must be {spec.dim} finite value(s), got {start.tolist()}")

    z = standard_normals(_as_seed(seed), stream, n, width=spec.dim, workers=workers)
    if spec.dim == 2:
        rho = spec.correlation
        z[:, 1] = rho * z[:, 0] + math.sqrt(1.0 - rho * rho) * z[:, 1]

    drift = np.asarray(spec.drift)
    scale = np.asarray(spec.sigma) * math.sqrt(horizon)
    return (start + horizon * drift) + scale * z


def forecast_random_walk(spec, start, horizon, n, seed, stream='random_walk', workers=None):
    """
    Sample of terminal values for a one-dimensional walk, aligned pairs
    for a two-dimensional one.
    """
    values = terminal_values(spec, start, horizon, n, seed, stream=stream, workers=workers)
    if spec.dim == 1:
        return Sample(values[:, 0])
    return PairedSample(values[:, 0], values[:, 1])


def _year_position(params, year):
    idx = np.flatnonzero(params.years == year)
    if idx.size == 0:
        raise InvalidInputError(
            f"Base year {year} is outside the fitted years "
            f"{int(params.years[0])}-{int(params.years[-1])}"
        )
    return int(idx[0])


def _check_population(params, population_id):
    if population_id not in params.population_ids:
        raise InvalidInputError(
            f"Population '{population_id}' was not fitted by these {params.kind} parameters "
            f"({', '.join(params.population_ids)})"
        )


def simulate_rates(params, population_id, idx, n, seed, stream=None, workers=None):
    """
    Simulated central death rates (n x ages) at ``idx.target_year`` for the
    index ages of one population. Time-series models have no rates.
    """
    _check_population(params, population_id)
    if stream is None:
        stream = f"index:{population_id}"
    ages = idx.ages

    if isinstance(params, CBDParams):
        if ages[0] < params.ages[0] or ages[-1] > params.ages[-1]:
            raise InvalidInputError(
                f"Index ages {idx.alpha}-{idx.omega} are outside the fitted ages "
                f"{int(params.ages[0])}-{int(params.ages[-1])}"
            )
        t0 = _year_position(params, idx.base_year)
        start = (params.theta[t0], params.tau[t0])
        terminal = terminal_values(params.walk, start, idx.horizon, n, seed, stream=stream, workers=workers)
        # mu = log(1 + exp(theta + x * tau))
        return np.logaddexp(0.0, terminal[:, :1] + ages[None, :] * terminal[:, 1:])

    if isinstance(params, FactorParams):
        missing = np.setdiff1d(ages, params.ages)
        if missing.size:
            raise InvalidInputError(f"Index ages {missing.tolist()} were not part of the {params.kind} fit")
        pop = params.population(population_id)
        t0 = _year_position(params, idx.base_year)
        start = [kappa[t0] for kappa in pop.kappas]
        terminal = terminal_values(pop.walk, start, idx.horizon, n, seed, stream=stream, workers=workers)
        columns = np.searchsorted(params.ages, ages)
        return np.exp(pop.log_rates(terminal)[:, columns])

    raise InvalidInputError(f"{params.kind} parameters do not simulate death rates")


def _timeseries_draws(params, idx, n, seed, stream, workers):
    for name in ('alpha', 'omega', 'horizon'):
        if getattr(params, name) != getattr(idx, name):
            raise InvalidInputError(
                f"{params.kind} series was fitted with {name}={getattr(params, name)}, "
                f"the index uses {getattr(idx, name)}"
            )
    steps = idx.base_year - params.last_year
    if steps < 1:
        raise InvalidInputError(
            f"Index for base year {idx.base_year} is already observed "
            f"(series ends at {params.last_year})"
        )
    if params.kind == ModelKind.LOGNORMAL:
        start = math.log(params.last_value)
    else:
        start = params.last_value
    values = terminal_values(params.walk, start, steps, n, seed, stream=stream, workers=workers)[:, 0]
    return np.exp(values) if params.kind == ModelKind.LOGNORMAL else values


def index_draws(params, table, idx, n, seed, stream=None, workers=None):
    """Unsorted index draws for the population of ``table``."""
    population_id = table.population_id
    _check_population(params, population_id)
    table.year_index(idx.base_year)
    table.age_indices(idx.ages)
    if stream is None:
        stream = f"index:{population_id}"

    if isinstance(params, TimeSeriesParams):
        draws = _timeseries_draws(params, idx, n, seed, stream, workers)
    else:
        future = simulate_rates(params, population_id, idx, n, seed, stream=stream, workers=workers)
        draws = improvement_index(future, base_rates(table, idx), idx.horizon)

    if not np.all(np.isfinite(draws)):
        raise NumericalFailure(f"{population_id}: simulated index contains non-finite values")
    return draws


def simulate_index(params, table, idx, n, seed, stream=None, workers=None):
    draws = index_draws(params, table, idx, n, seed, stream=stream, workers=workers)
    sample = Sample(draws)
    logger.info(
        f"Simulated {n} {params.kind} index values for {table.population_id}: "
        f"median {np.median(sample.values):.6f}"
    )
    return sample
