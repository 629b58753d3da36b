"""
Empirical distributions built from simulated draws.

A ``Sample`` is an immutable, sorted vector of finite draws. ``EmpiricalDist``
wraps a sample with its right-continuous step CDF and the left-continuous
generalized inverse used as the quantile function.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from django.conf import settings
from django.db import models

from longevity_bounds.exceptions import InvalidInputError

logger = logging.getLogger(__name__)


class OrderVerdict(models.TextChoices):
    FIRST_DISP_SECOND = 'first_disp_second', 'First is dispersive-smaller'
    SECOND_DISP_FIRST = 'second_disp_first', 'Second is dispersive-smaller'
    NEITHER = 'neither', 'Not dispersively ordered'
    DEGENERATE_EQUAL = 'degenerate_equal', 'Equal up to tolerance'


@dataclass(frozen=True, eq=False)
class Sample:
    """Sorted, read-only vector of finite draws"""
    values: np.ndarray

    def __post_init__(self):
        values = np.sort(np.asarray(self.values, dtype=float).ravel(), kind='stable')
        if values.size == 0:
            raise InvalidInputError("A sample needs at least one value")
        if not np.all(np.isfinite(values)):
            raise InvalidInputError("Sample values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    def __len__(self):
        return self.values.size

    @property
    def n(self):
        return self.values.size

    @property
    def lower(self):
        return float(self.values[0])

    @property
    def upper(self):
        return float(self.values[-1])

    @property
    def mean(self):
        # fsum keeps the mean independent of the order the draws were summed in
        return math.fsum(self.values) / self.n

    def dist(self):
        return EmpiricalDist(self)


@dataclass(frozen=True, eq=False)
class EmpiricalDist:
    sample: Sample

    @property
    def values(self):
        return self.sample.values

    @property
    def n(self):
        return self.sample.n

    @property
    def lower(self):
        return self.sample.lower

    @property
    def upper(self):
        return self.sample.upper

    @property
    def levels(self):
        """Probability levels k/n reached at each order statistic"""
        return np.arange(1, self.n + 1) / self.n

    def cdf(self, x):
        counts = np.searchsorted(self.values, x, side='right')
        return counts / self.n

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        if np.any(~np.isfinite(p)) or np.any(p <= 0) or np.any(p > 1):
            raise InvalidInputError(f"Quantile levels must lie in (0, 1], got {p}")
        idx = np.searchsorted(self.levels, p, side='left')
        return self.values[np.minimum(idx, self.n - 1)]


def _as_dist(obj):
    if isinstance(obj, EmpiricalDist):
        return obj
    if isinstance(obj, Sample):
        return obj.dist()
    return Sample(obj).dist()


def ecdf_eval(dist, x):
    """Share of draws at or below ``x``; arrays are evaluated elementwise."""
    result = _as_dist(dist).cdf(x)
    return float(result) if np.ndim(result) == 0 else result


def quantile(dist, p):
    """Smallest draw whose CDF reaches ``p``."""
    result = _as_dist(dist).quantile(p)
    return float(result) if np.ndim(result) == 0 else result


def median_difference(s1, s2):
    return quantile(s1, 0.5) - quantile(s2, 0.5)


def default_grid(points=None):
    if points is None:
        points = getattr(settings, 'BOUNDS_DISPERSIVE_GRID_POINTS', 99)
    return np.linspace(0.01, 0.99, int(points))


def _validate_grid(grid):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 3:
        raise InvalidInputError("The probability grid needs at least 3 points")
    if not np.all(np.isfinite(grid)) or grid[0] <= 0 or grid[-1] >= 1:
        raise InvalidInputError("Probability grid points must lie strictly inside (0, 1)")
    if np.any(np.diff(grid) <= 0):
        raise InvalidInputError("Probability grid must be strictly increasing")
    return grid


def dispersive_order_check(s1, s2, grid=None, tolerance=None):
    """
    Compare the spread of two samples through g(p) = F1^-1(p) - F2^-1(p).

    ``tolerance`` is relative to the combined range of both samples and
    defaults to ``BOUNDS_MONOTONE_TOLERANCE``.
    """
    grid = default_grid() if grid is None else _validate_grid(grid)
    d1, d2 = _as_dist(s1), _as_dist(s2)
    if tolerance is None:
        tolerance = getattr(settings, 'BOUNDS_MONOTONE_TOLERANCE', 1e-9)
    span = max(d1.upper, d2.upper) - min(d1.lower, d2.lower)
    tau = tolerance * span if span > 0 else tolerance

    g = d1.quantile(grid) - d2.quantile(grid)
    steps = np.diff(g)

    if np.all(np.abs(g) <= tau):
        verdict = OrderVerdict.DEGENERATE_EQUAL
    elif np.all(steps >= -tau):
        verdict = OrderVerdict.SECOND_DISP_FIRST
    elif np.all(steps <= tau):
        verdict = OrderVerdict.FIRST_DISP_SECOND
    else:
        verdict = OrderVerdict.NEITHER

    logger.debug(f"Dispersive order check on {grid.size} levels: {verdict}")
    return verdict
