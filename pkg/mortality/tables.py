"""
Deaths/exposure tables and the mortality-improvement index.

The index of a population over ages alpha..omega, base year t0 and horizon T
is ``1 - mean_x (mu[x, t0 + T] / mu[x, t0]) ** (1 / T)``: the average
annualized rate at which mortality improves over the horizon.
"""
import logging
from dataclasses import dataclass

import numpy as np

from longevity_bounds.exceptions import InvalidInputError

logger = logging.getLogger(__name__)


def _readonly(values, dtype):
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class MortalityTable:
    """Dense year x age matrices of deaths and exposure-to-risk for one population"""
    population_id: str
    years: np.ndarray
    ages: np.ndarray
    deaths: np.ndarray
    exposure: np.ndarray

    def __post_init__(self):
        years = _readonly(self.years, int)
        ages = _readonly(self.ages, int)
        deaths = _readonly(self.deaths, float)
        exposure = _readonly(self.exposure, float)

        if years.ndim != 1 or ages.ndim != 1 or years.size == 0 or ages.size == 0:
            raise InvalidInputError(f"{self.population_id}: years and ages must be non-empty vectors")
        if np.any(np.diff(years) <= 0) or np.any(np.diff(ages) <= 0):
            raise InvalidInputError(f"{self.population_id}: years and ages must be strictly increasing")
        shape = (years.size, ages.size)
        if deaths.shape != shape or exposure.shape != shape:
            raise InvalidInputError(
                f"{self.population_id}: deaths and exposure must be {shape} matrices, "
                f"got {deaths.shape} and {exposure.shape}"
            )
        if not (np.all(np.isfinite(deaths)) and np.all(np.isfinite(exposure))):
            raise InvalidInputError(f"{self.population_id}: deaths and exposure must be finite")
        if np.any(deaths < 0):
            year, age = self._first_cell(deaths < 0, years, ages)
            raise InvalidInputError(f"{self.population_id}: negative deaths at year {year}, age {age}")
        if np.any(exposure <= 0):
            year, age = self._first_cell(exposure <= 0, years, ages)
            raise InvalidInputError(
                f"{self.population_id}: exposure must be positive, got zero or less at year {year}, age {age}"
            )

        for name, value in (('years', years), ('ages', ages), ('deaths', deaths), ('exposure', exposure)):
            object.__setattr__(self, name, value)

    @staticmethod
    def _first_cell(mask, years, ages):
        row, col = np.argwhere(mask)[0]
        return int(years[row]), int(ages[col])

    def __str__(self):
        return (
            f"{self.population_id} ({self.years[0]}-{self.years[-1]}, "
            f"ages {self.ages[0]}-{self.ages[-1]})"
        )

    @property
    def shape(self):
        return self.deaths.shape

    @property
    def rates(self):
        """Crude central death rates deaths / exposure"""
        return self.deaths / self.exposure

    def year_index(self, year):
        idx = np.flatnonzero(self.years == year)
        if idx.size == 0:
            raise InvalidInputError(f"{self.population_id}: year {year} is not in the table")
        return int(idx[0])

    def age_indices(self, ages):
        ages = np.asarray(ages, dtype=int)
        missing = np.setdiff1d(ages, self.ages)
        if missing.size:
            raise InvalidInputError(
                f"{self.population_id}: ages {missing.tolist()} are not in the table"
            )
        return np.searchsorted(self.ages, ages)

    def rates_at(self, year, ages):
        return self.rates[self.year_index(year), self.age_indices(ages)]

    def restrict(self, years=None, ages=None):
        """Sub-table for inclusive ``(first, last)`` year and age windows."""
        year_mask = np.ones(self.years.size, dtype=bool)
        age_mask = np.ones(self.ages.size, dtype=bool)
        if years is not None:
            year_mask = (self.years >= years[0]) & (self.years <= years[1])
        if ages is not None:
            age_mask = (self.ages >= ages[0]) & (self.ages <= ages[1])
        if not year_mask.any() or not age_mask.any():
            raise InvalidInputError(
                f"{self.population_id}: window years={years} ages={ages} leaves no data"
            )
        return MortalityTable(
            population_id=self.population_id,
            years=self.years[year_mask],
            ages=self.ages[age_mask],
            deaths=self.deaths[np.ix_(year_mask, age_mask)],
            exposure=self.exposure[np.ix_(year_mask, age_mask)],
        )

    @classmethod
    def from_frame(cls, frame, population_id):
        """Build a table from a long frame with year, age, deaths and exposure columns."""
        years = np.unique(frame['year'].to_numpy(dtype=int))
        ages = np.unique(frame['age'].to_numpy(dtype=int))
        deaths = np.full((years.size, ages.size), np.nan)
        exposure = np.full((years.size, ages.size), np.nan)
        rows = np.searchsorted(years, frame['year'].to_numpy(dtype=int))
        cols = np.searchsorted(ages, frame['age'].to_numpy(dtype=int))
        deaths[rows, cols] = frame['deaths'].to_numpy(dtype=float)
        exposure[rows, cols] = frame['exposure'].to_numpy(dtype=float)

        if np.isnan(deaths).any():
            year, age = cls._first_cell(np.isnan(deaths), years, ages)
            raise InvalidInputError(f"{population_id}: no data for year {year}, age {age}")
        return cls(population_id, years, ages, deaths, exposure)


@dataclass(frozen=True)
class IndexDefinition:
    alpha: int
    omega: int
    horizon: int
    base_year: int

    def __post_init__(self):
        for name in ('alpha', 'omega', 'horizon', 'base_year'):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value:
                raise InvalidInputError(f"Index {name} must be an integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if not self.alpha < self.omega:
            raise InvalidInputError(f"Index ages need alpha < omega, got {self.alpha} and {self.omega}")
        if self.horizon < 1:
            raise InvalidInputError(f"Index horizon must be at least one year, got {self.horizon}")

    @property
    def ages(self):
        return np.arange(self.alpha, self.omega + 1)

    @property
    def target_year(self):
        return self.base_year + self.horizon


def base_rates(table, idx):
    """Observed rates at the index ages in the base year; they must be positive."""
    rates = table.rates_at(idx.base_year, idx.ages)
    if np.any(rates <= 0):
        age = int(idx.ages[np.flatnonzero(rates <= 0)[0]])
        raise InvalidInputError(
            f"{table.population_id}: no deaths observed at age {age} in base year {idx.base_year}"
        )
    return rates


def improvement_index(future_rates, base, horizon):
    """
    Index value for each row of ``future_rates`` (draws x ages) against
    the base-year rates.
    """
    future_rates = np.atleast_2d(np.asarray(future_rates, dtype=float))
    ratios = future_rates / np.asarray(base, dtype=float)
    return 1.0 - np.mean(ratios ** (1.0 / horizon), axis=1)
