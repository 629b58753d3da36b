"""
Fitting the marginal mortality models.

- CBD: per-year OLS of logit q on age, with q = 1 - exp(-mu).
- Lee-Carter, Li-Lee and CAE: Poisson maximum likelihood for the deaths,
  alternating one-parameter Newton steps over the age effect and each factor.
- Normal and log-normal: random walk on the historical index series.
"""
import logging

import numpy as np
from django.conf import settings

from longevity_bounds.exceptions import InvalidInputError, NumericalFailure
from .params import (
    CBDParams,
    FactorParams,
    ModelKind,
    PopulationFactors,
    RandomWalkSpec,
    TimeSeriesParams,
    TWO_POPULATION_KINDS,
    TIME_SERIES_KINDS,
)

logger = logging.getLogger(__name__)

# (common beta, common kappa) for each factor
FACTOR_STRUCTURES = {
    ModelKind.LEE_CARTER: ((False, False),),
    ModelKind.LI_LEE: ((False, False), (True, True)),
    ModelKind.CAE: ((True, False), (True, False)),
}


def _first_bad_cell(table, mask):
    row, col = np.argwhere(mask)[0]
    return int(table.years[row]), int(table.ages[col])


def fit_cbd(table):
    if table.ages.size < 3 or table.years.size < 3:
        raise InvalidInputError(
            f"{table.population_id}: CBD needs at least 3 ages and 3 years, got {table.shape}"
        )
    mu = table.rates
    if np.any(mu <= 0):
        year, age = _first_bad_cell(table, mu <= 0)
        raise InvalidInputError(f"{table.population_id}: nonpositive death rate at year {year}, age {age}")

    # log(1 - q) = -mu
    logit_q = np.log(-np.expm1(-mu)) + mu
    design = np.column_stack([np.ones(table.ages.size), table.ages.astype(float)])
    coef, _, rank, _ = np.linalg.lstsq(design, logit_q.T, rcond=None)
    if rank < 2:
        raise NumericalFailure(f"{table.population_id}: singular CBD regression")

    theta, tau = coef
    walk = RandomWalkSpec.from_increments(np.column_stack([np.diff(theta), np.diff(tau)]))
    logger.info(
        f"Fitted CBD for {table.population_id}: drift=({walk.drift[0]:.5f}, {walk.drift[1]:.6f})"
    )
    return CBDParams(
        population_id=table.population_id,
        years=table.years,
        ages=table.ages,
        theta=theta,
        tau=tau,
        walk=walk,
    )


def _normalized(beta, kappa):
    total = beta.sum()
    if abs(total) < 1e-8:
        return np.full_like(beta, 1.0 / beta.size), np.zeros_like(kappa)
    return beta / total, kappa * total


def _initial_factors(log_m, lam, structure):
    """
    Leading singular vectors of the centred log rates, one factor at a time.
    Fully common factors are taken first, from the average over populations.
    """
    n_pop, n_years, n_ages = log_m.shape
    beta = np.zeros((len(structure), n_pop, n_ages))
    kappa = np.zeros((len(structure), n_pop, n_years))
    residual = log_m - lam[:, None, :]

    order = sorted(range(len(structure)), key=lambda f: not all(structure[f]))
    for f in order:
        common_beta, common_kappa = structure[f]
        if common_beta and common_kappa:
            u, s, vt = np.linalg.svd(residual.mean(axis=0).T, full_matrices=False)
            b, k = _normalized(u[:, 0], s[0] * vt[0])
            beta[f], kappa[f] = b, k
        elif common_beta:
            stacked = np.concatenate(list(residual), axis=0).T
            u, s, vt = np.linalg.svd(stacked, full_matrices=False)
            b, k = _normalized(u[:, 0], s[0] * vt[0])
            beta[f] = b
            kappa[f] = k.reshape(n_pop, n_years)
        else:
            for p in range(n_pop):
                u, s, vt = np.linalg.svd(residual[p].T, full_matrices=False)
                beta[f, p], kappa[f, p] = _normalized(u[:, 0], s[0] * vt[0])
        residual = residual - kappa[f][:, :, None] * beta[f][:, None, :]
    return beta, kappa


def _log_rates(lam, beta, kappa):
    return lam[:, None, :] + np.einsum('fpt,fpa->pta', kappa, beta)


def _newton_step(num, den, pooled, floor):
    if pooled:
        num = num.sum(axis=0, keepdims=True)
        den = den.sum(axis=0, keepdims=True)
    # cells with almost no expected deaths keep their value
    return np.divide(num, den, out=np.zeros_like(num), where=den > floor)


def apply_constraints(lam, beta, kappa):
    """
    Normalize every factor to sum(beta) = 1 and sum(kappa) = 0, moving the
    kappa level into the age effect. Works in place on the arrays.
    """
    for f in range(beta.shape[0]):
        level = kappa[f].mean(axis=1)
        lam += level[:, None] * beta[f]
        kappa[f] -= level[:, None]
        scale = beta[f].sum(axis=1)
        if np.any(np.abs(scale) < 1e-12):
            raise NumericalFailure(f"Factor {f} has age loadings summing to zero")
        beta[f] /= scale[:, None]
        kappa[f] *= scale[:, None]
    return lam, beta, kappa


def _assemble(kind, years, ages, population_ids, lam, beta, kappa):
    populations = []
    for p, population_id in enumerate(population_ids):
        increments = np.diff(kappa[:, p, :], axis=1).T
        populations.append(PopulationFactors(
            population_id=population_id,
            lam=lam[p],
            betas=tuple(beta[:, p, :]),
            kappas=tuple(kappa[:, p, :]),
            walk=RandomWalkSpec.from_increments(increments),
        ))
    return FactorParams(kind=kind, years=years, ages=ages, populations=tuple(populations))


def _stacked(params):
    lam = np.array([pop.lam for pop in params.populations])
    beta = np.array([[pop.betas[f] for pop in params.populations] for f in range(len(params.populations[0].betas))])
    kappa = np.array([[pop.kappas[f] for pop in params.populations] for f in range(len(params.populations[0].kappas))])
    return lam, beta, kappa


def apply_identifiability(params):
    """Re-apply the factor constraints to fitted parameters."""
    lam, beta, kappa = apply_constraints(*_stacked(params))
    return _assemble(params.kind, params.years, params.ages, params.population_ids, lam, beta, kappa)


def _check_tables(tables, kind):
    tables = (tables,) if not isinstance(tables, (list, tuple)) else tuple(tables)
    expected = 2 if kind in TWO_POPULATION_KINDS else 1
    if len(tables) != expected:
        raise InvalidInputError(f"{kind} needs {expected} mortality table(s), got {len(tables)}")
    first = tables[0]
    for table in tables[1:]:
        if not (np.array_equal(table.years, first.years) and np.array_equal(table.ages, first.ages)):
            raise InvalidInputError(
                f"Tables {first.population_id} and {table.population_id} must cover the same years and ages"
            )
        if table.population_id == first.population_id:
            raise InvalidInputError(f"Both tables belong to population {first.population_id}")
    return tables


def fit_factor_model(tables, kind, tolerance=None, max_iter=None):
    if kind not in FACTOR_STRUCTURES:
        raise InvalidInputError(f"'{kind}' is not a factor model")
    kind = ModelKind(kind)
    tables = _check_tables(tables, kind)
    if tolerance is None:
        tolerance = getattr(settings, 'BOUNDS_MLE_TOLERANCE', 1e-8)
    if max_iter is None:
        max_iter = getattr(settings, 'BOUNDS_MLE_MAX_ITER', 10_000)
    structure = FACTOR_STRUCTURES[kind]

    deaths = np.stack([t.deaths for t in tables])
    exposure = np.stack([t.exposure for t in tables])
    log_m = np.log(np.maximum(deaths, 0.5) / exposure)
    lam = log_m.mean(axis=1)

    if kind == ModelKind.LEE_CARTER:
        n_ages = deaths.shape[2]
        beta = np.full((1, 1, n_ages), 1.0 / n_ages)
        kappa = np.zeros((1, 1, deaths.shape[1]))
    else:
        beta, kappa = _initial_factors(log_m, lam, structure)

    def loglik():
        eta = _log_rates(lam, beta, kappa)
        fitted = exposure * np.exp(eta)
        return float(np.sum(deaths * eta - fitted)), fitted

    previous, fitted = loglik()
    for iteration in range(1, max_iter + 1):
        floor = 1e-12 * fitted.sum()
        lam += _newton_step(
            (deaths - fitted).sum(axis=1), fitted.sum(axis=1), False, floor
        )
        for f, (common_beta, common_kappa) in enumerate(structure):
            _, fitted = loglik()
            kappa[f] += _newton_step(
                ((deaths - fitted) * beta[f][:, None, :]).sum(axis=2),
                (fitted * beta[f][:, None, :] ** 2).sum(axis=2),
                common_kappa, floor,
            )
            _, fitted = loglik()
            beta[f] += _newton_step(
                ((deaths - fitted) * kappa[f][:, :, None]).sum(axis=1),
                (fitted * kappa[f][:, :, None] ** 2).sum(axis=1),
                common_beta, floor,
            )

        current, fitted = loglik()
        if not np.isfinite(current):
            raise NumericalFailure(f"{kind} likelihood diverged at iteration {iteration}")
        if abs(current - previous) <= tolerance * abs(previous):
            break
        previous = current
    else:
        raise NumericalFailure(f"{kind} fit did not converge after {max_iter} iterations")

    apply_constraints(lam, beta, kappa)
    population_ids = [t.population_id for t in tables]
    logger.info(f"Fitted {kind} for {', '.join(population_ids)} in {iteration} iterations")
    return _assemble(kind, tables[0].years, tables[0].ages, population_ids, lam, beta, kappa)


def index_series(table, alpha, omega, horizon):
    """
    Historical index values y_t for every start year t whose t + horizon is
    observed; the last ``horizon`` years only serve as end points.
    """
    if np.any(np.diff(table.years) != 1):
        raise InvalidInputError(f"{table.population_id}: index series needs consecutive years")
    ages = np.arange(alpha, omega + 1)
    mu = table.rates[:, table.age_indices(ages)]
    if np.any(mu <= 0):
        year, age = np.argwhere(mu <= 0)[0]
        raise InvalidInputError(
            f"{table.population_id}: nonpositive death rate at year {table.years[year]}, age {ages[age]}"
        )
    ratios = mu[horizon:] / mu[:-horizon]
    values = 1.0 - np.mean(ratios ** (1.0 / horizon), axis=1)
    return table.years[:-horizon], values


def fit_timeseries(table, idx, kind):
    if kind not in TIME_SERIES_KINDS:
        raise InvalidInputError(f"'{kind}' is not a time-series model")
    kind = ModelKind(kind)
    if table.years.size - idx.horizon < 5:
        raise InvalidInputError(
            f"{table.population_id}: {table.years.size} years give fewer than 5 index observations "
            f"at horizon {idx.horizon}"
        )
    years, values = index_series(table, idx.alpha, idx.omega, idx.horizon)

    series = values
    if kind == ModelKind.LOGNORMAL:
        if np.any(values <= 0):
            year = int(years[np.flatnonzero(values <= 0)[0]])
            raise InvalidInputError(
                f"{table.population_id}: index value {values[years == year][0]:.6f} in {year} "
                f"is not positive, the log-normal model cannot be fitted"
            )
        series = np.log(values)

    walk = RandomWalkSpec.from_increments(np.diff(series))
    logger.info(
        f"Fitted {kind} series for {table.population_id}: drift={walk.drift[0]:.6f}, "
        f"sigma={walk.sigma[0]:.6f}"
    )
    return TimeSeriesParams(
        kind=kind,
        population_id=table.population_id,
        alpha=idx.alpha,
        omega=idx.omega,
        horizon=idx.horizon,
        years=years,
        values=values,
        walk=walk,
    )
