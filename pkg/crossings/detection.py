"""
Crossing points between two empirical CDFs.

Both CDFs are step functions, so they can only change order at a sample
value: the scan runs over the merged support. Differences within ``band``
count as equality, so sign flips that never leave the band are merged away.
Between two strict runs of opposite sign, the crossing is the right end of
the stretch on which the difference has not yet taken the new sign.
"""
import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from distributions.empirical import EmpiricalDist, Sample
from longevity_bounds.exceptions import InvalidInputError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Region:
    """
    Interval between two crossings (or a crossing and the support edge).

    Outer regions carry ``open_below``/``open_above`` and extend to infinity
    for membership tests; the stored bound is the support edge.
    """
    lower: float
    upper: float
    open_below: bool = False
    open_above: bool = False

    def contains(self, x):
        lower = -math.inf if self.open_below else self.lower
        upper = math.inf if self.open_above else self.upper
        return lower <= x <= upper

    def contains_layer(self, layer):
        return self.contains(layer.delta) and self.contains(layer.epsilon)

    def __str__(self):
        left = '(' if self.open_below else '['
        right = ')' if self.open_above else ']'
        return f"{left}{self.lower:.6g}, {self.upper:.6g}{right}"


@dataclass(frozen=True)
class CrossingSet:
    points: tuple
    signs: tuple
    band: float
    lower: float
    upper: float

    @property
    def n_crossings(self):
        return len(self.points)

    @property
    def is_empty(self):
        return not self.points

    @property
    def first_sign(self):
        """Sign of F_a - F_b on the first strict run, 0 when the CDFs never separate"""
        return self.signs[0] if self.signs else 0

    @property
    def unique_point(self):
        return self.points[0] if len(self.points) == 1 else None


class RegionLists(NamedTuple):
    le: list
    ge: list


def _as_dist(obj):
    if isinstance(obj, EmpiricalDist):
        return obj
    if isinstance(obj, Sample):
        return obj.dist()
    raise InvalidInputError(f"Expected an empirical distribution, got {obj!r}")


def default_band(a, b):
    """Twice the largest CDF step of the two inputs."""
    return 2.0 / min(a.n, b.n)


def detect_crossings(a, b, band=None):
    a, b = _as_dist(a), _as_dist(b)
    if band is None:
        band = default_band(a, b)
    band = float(band)
    if not band >= 0:
        raise InvalidInputError(f"Crossing band must be non-negative, got {band}")

    grid = np.union1d(a.values, b.values)
    diff = a.cdf(grid) - b.cdf(grid)
    signs = np.where(diff > band, 1, np.where(diff < -band, -1, 0))

    strict = np.flatnonzero(signs)
    run_signs = []
    points = []
    last_strict = None
    for idx in strict:
        sign = int(signs[idx])
        if not run_signs:
            run_signs.append(sign)
        elif sign != run_signs[-1]:
            # the crossing is where the raw difference takes the new sign for good
            gap = diff[last_strict:idx] * sign
            start = last_strict + int(np.flatnonzero(gap <= 0)[-1]) + 1
            run_signs.append(sign)
            points.append(float(grid[start]))
        last_strict = idx

    crossing_set = CrossingSet(
        points=tuple(points),
        signs=tuple(run_signs),
        band=band,
        lower=min(a.lower, b.lower),
        upper=max(a.upper, b.upper),
    )
    logger.debug(f"Detected {crossing_set.n_crossings} crossings with band {band:.3g}")
    return crossing_set


def classify_regions(cs, direction='first'):
    """
    Split the support into regions where F_X <= F_Y and where F_X >= F_Y.

    ``direction`` names the convex-smaller input X: 'first' for ``a`` and
    'second' for ``b`` of ``detect_crossings(a, b)``. The ``le`` list starts
    with the left tail (l, d1]; ``ge`` starts with the right tail [dN, u)
    when the number of crossings is odd.
    """
    if direction not in ('first', 'second'):
        raise InvalidInputError(f"Direction must be 'first' or 'second', got {direction!r}")
    orientation = 1 if direction == 'first' else -1

    if cs.first_sign * orientation > 0:
        raise InvalidInputError(
            f"Direction '{direction}' contradicts the CDFs: the convex-smaller input "
            f"must start below the other one"
        )

    whole = Region(cs.lower, cs.upper, open_below=True, open_above=True)
    if cs.first_sign == 0:
        return RegionLists(le=[whole], ge=[whole])
    if cs.n_crossings == 0:
        return RegionLists(le=[whole], ge=[])

    d = cs.points
    n = len(d)
    intervals = [Region(cs.lower, d[0], open_below=True)]
    intervals += [Region(d[k], d[k + 1]) for k in range(n - 1)]
    intervals.append(Region(d[-1], cs.upper, open_above=True))

    le = [region for k, region in enumerate(intervals) if k % 2 == 0]
    ge = [region for k, region in enumerate(intervals) if k % 2 == 1]
    if n % 2 == 1:
        ge.insert(0, ge.pop())
    return RegionLists(le=le, ge=ge)
