"""
Fitted parameters for the six marginal models.

Each fitted model carries the random walk with drift its time indices
follow. ``params_to_dict``/``params_from_dict`` give the JSON form used by
the ``fit`` and ``simulate`` commands.
"""
import math
from dataclasses import dataclass, field

import numpy as np
from django.db import models

from longevity_bounds.exceptions import InvalidInputError


class ModelKind(models.TextChoices):
    CBD = 'cbd', 'Cairns-Blake-Dowd'
    LEE_CARTER = 'lee_carter', 'Lee-Carter'
    LI_LEE = 'li_lee', 'Li-Lee'
    CAE = 'cae', 'Common age effect'
    NORMAL = 'normal', 'Normal time series'
    LOGNORMAL = 'lognormal', 'Log-normal time series'


FACTOR_KINDS = (ModelKind.LEE_CARTER, ModelKind.LI_LEE, ModelKind.CAE)
TWO_POPULATION_KINDS = (ModelKind.LI_LEE, ModelKind.CAE)
TIME_SERIES_KINDS = (ModelKind.NORMAL, ModelKind.LOGNORMAL)


def _vector(values):
    array = np.array(values, dtype=float, copy=True).ravel()
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class RandomWalkSpec:
    """
    Random walk with drift in one or two dimensions.

    ``correlation`` links the two increments when ``dim == 2``.
    """
    drift: tuple
    sigma: tuple
    correlation: float = 0.0

    def __post_init__(self):
        drift = tuple(float(v) for v in np.atleast_1d(self.drift))
        sigma = tuple(float(v) for v in np.atleast_1d(self.sigma))
        if len(drift) != len(sigma) or len(drift) not in (1, 2):
            raise InvalidInputError("Random walks need one or two matching drift/sigma entries")
        if not all(math.isfinite(v) for v in drift + sigma):
            raise InvalidInputError("Random walk drift and sigma must be finite")
        if any(v < 0 for v in sigma):
            raise InvalidInputError(f"Random walk volatility must be non-negative, got {sigma}")
        correlation = float(self.correlation)
        if not (math.isfinite(correlation) and -1.0 <= correlation <= 1.0):
            raise InvalidInputError(f"Correlation must lie in [-1, 1], got {self.correlation}")
        object.__setattr__(self, 'drift', drift)
        object.__setattr__(self, 'sigma', sigma)
        object.__setattr__(self, 'correlation', correlation)

    @property
    def dim(self):
        return len(self.drift)

    @classmethod
    def from_increments(cls, increments):
        """Drift, volatility and correlation from first differences (rows are years)."""
        increments = np.asarray(increments, dtype=float)
        if increments.ndim == 1:
            increments = increments[:, None]
        if increments.shape[0] < 1:
            raise InvalidInputError("Estimating a random walk needs at least two observations")
        drift = increments.mean(axis=0)
        if increments.shape[0] > 1:
            sigma = increments.std(axis=0, ddof=1)
        else:
            sigma = np.zeros(increments.shape[1])
        correlation = 0.0
        if increments.shape[1] == 2 and increments.shape[0] > 2 and np.all(sigma > 1e-12 * (1 + np.abs(drift))):
            correlation = float(np.clip(np.corrcoef(increments.T)[0, 1], -1.0, 1.0))
        return cls(tuple(drift), tuple(sigma), correlation)

    def to_dict(self):
        return {'drift': list(self.drift), 'sigma': list(self.sigma), 'correlation': self.correlation}

    @classmethod
    def from_dict(cls, data):
        return cls(tuple(data['drift']), tuple(data['sigma']), data.get('correlation', 0.0))


@dataclass(frozen=True, eq=False)
class CBDParams:
    population_id: str
    years: np.ndarray
    ages: np.ndarray
    theta: np.ndarray
    tau: np.ndarray
    walk: RandomWalkSpec
    kind: str = field(default=ModelKind.CBD, init=False)

    def __post_init__(self):
        for name in ('years', 'ages', 'theta', 'tau'):
            object.__setattr__(self, name, _vector(getattr(self, name)))
        if self.theta.size != self.years.size or self.tau.size != self.years.size:
            raise InvalidInputError("CBD time indices must have one value per year")
        if self.walk.dim != 2:
            raise InvalidInputError("CBD indices follow a two-dimensional random walk")

    @property
    def population_ids(self):
        return (self.population_id,)


@dataclass(frozen=True, eq=False)
class PopulationFactors:
    """
    Age effect ``lam`` plus (beta, kappa) factor pairs of one population.

    Common factors of a joint fit hold equal values in every population.
    """
    population_id: str
    lam: np.ndarray
    betas: tuple
    kappas: tuple
    walk: RandomWalkSpec

    def __post_init__(self):
        object.__setattr__(self, 'lam', _vector(self.lam))
        object.__setattr__(self, 'betas', tuple(_vector(b) for b in self.betas))
        object.__setattr__(self, 'kappas', tuple(_vector(k) for k in self.kappas))
        if len(self.betas) != len(self.kappas) or not self.betas:
            raise InvalidInputError("Each factor needs one beta and one kappa vector")
        if any(b.size != self.lam.size for b in self.betas):
            raise InvalidInputError("Age effects must have one value per age")
        if self.walk.dim != len(self.kappas):
            raise InvalidInputError("The random walk needs one dimension per factor")

    def log_rates(self, kappas):
        """Log rates (draws x ages) for factor indices ``kappas`` (draws x factors)."""
        kappas = np.atleast_2d(kappas)
        log_rates = np.broadcast_to(self.lam, (kappas.shape[0], self.lam.size)).copy()
        for f, beta in enumerate(self.betas):
            log_rates += kappas[:, f:f + 1] * beta[None, :]
        return log_rates


@dataclass(frozen=True, eq=False)
class FactorParams:
    kind: str
    years: np.ndarray
    ages: np.ndarray
    populations: tuple

    def __post_init__(self):
        if self.kind not in [k.value for k in FACTOR_KINDS]:
            raise InvalidInputError(f"'{self.kind}' is not a factor model")
        object.__setattr__(self, 'kind', ModelKind(self.kind))
        object.__setattr__(self, 'years', _vector(self.years))
        object.__setattr__(self, 'ages', _vector(self.ages))
        object.__setattr__(self, 'populations', tuple(self.populations))
        expected = 2 if self.kind in TWO_POPULATION_KINDS else 1
        if len(self.populations) != expected:
            raise InvalidInputError(f"{self.kind} needs {expected} populations, got {len(self.populations)}")

    @property
    def population_ids(self):
        return tuple(p.population_id for p in self.populations)

    def population(self, population_id):
        for pop in self.populations:
            if pop.population_id == population_id:
                return pop
        raise InvalidInputError(f"Population '{population_id}' is not part of this {self.kind} fit")


@dataclass(frozen=True, eq=False)
class TimeSeriesParams:
    """Random walk fitted to the historical index series ``values`` (one per year)"""
    kind: str
    population_id: str
    alpha: int
    omega: int
    horizon: int
    years: np.ndarray
    values: np.ndarray
    walk: RandomWalkSpec

    def __post_init__(self):
        if self.kind not in [k.value for k in TIME_SERIES_KINDS]:
            raise InvalidInputError(f"'{self.kind}' is not a time-series model")
        object.__setattr__(self, 'kind', ModelKind(self.kind))
        object.__setattr__(self, 'years', _vector(self.years))
        object.__setattr__(self, 'values', _vector(self.values))
        if self.walk.dim != 1:
            raise InvalidInputError("Time-series models follow a one-dimensional random walk")

    @property
    def population_ids(self):
        return (self.population_id,)

    @property
    def last_year(self):
        return int(self.years[-1])

    @property
    def last_value(self):
        return float(self.values[-1])


def params_to_dict(params):
    if isinstance(params, CBDParams):
        return {
            'model': ModelKind.CBD.value,
            'population_id': params.population_id,
            'years': params.years.astype(int).tolist(),
            'ages': params.ages.astype(int).tolist(),
            'theta': params.theta.tolist(),
            'tau': params.tau.tolist(),
            'walk': params.walk.to_dict(),
        }
    if isinstance(params, FactorParams):
        return {
            'model': params.kind.value,
            'years': params.years.astype(int).tolist(),
            'ages': params.ages.astype(int).tolist(),
            'populations': [
                {
                    'population_id': pop.population_id,
                    'lam': pop.lam.tolist(),
                    'betas': [b.tolist() for b in pop.betas],
                    'kappas': [k.tolist() for k in pop.kappas],
                    'walk': pop.walk.to_dict(),
                }
                for pop in params.populations
            ],
        }
    if isinstance(params, TimeSeriesParams):
        return {
            'model': params.kind.value,
            'population_id': params.population_id,
            'alpha': params.alpha,
            'omega': params.omega,
            'horizon': params.horizon,
            'years': params.years.astype(int).tolist(),
            'values': params.values.tolist(),
            'walk': params.walk.to_dict(),
        }
    raise InvalidInputError(f"Unknown parameter object {params!r}")


def params_from_dict(data):
    try:
        kind = data['model']
        if kind == ModelKind.CBD:
            return CBDParams(
                population_id=data['population_id'],
                years=data['years'],
                ages=data['ages'],
                theta=data['theta'],
                tau=data['tau'],
                walk=RandomWalkSpec.from_dict(data['walk']),
            )
        if kind in FACTOR_KINDS:
            return FactorParams(
                kind=kind,
                years=data['years'],
                ages=data['ages'],
                populations=[
                    PopulationFactors(
                        population_id=pop['population_id'],
                        lam=pop['lam'],
                        betas=pop['betas'],
                        kappas=pop['kappas'],
                        walk=RandomWalkSpec.from_dict(pop['walk']),
                    )
                    for pop in data['populations']
                ],
            )
        if kind in TIME_SERIES_KINDS:
            return TimeSeriesParams(
                kind=kind,
                population_id=data['population_id'],
                alpha=data['alpha'],
                omega=data['omega'],
                horizon=data['horizon'],
                years=data['years'],
                values=data['values'],
                walk=RandomWalkSpec.from_dict(data['walk']),
            )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InvalidInputError):
            raise
        raise InvalidInputError(f"Malformed model parameters: {exc}") from exc
    raise InvalidInputError(f"Unknown model kind {data.get('model')!r}")
