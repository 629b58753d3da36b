"""
Bound regimes and crossing-order checks for I, I^c and I^cm.

``cs_c`` compares F_{I^c} with F_I (I^c is convex-smaller) and ``cs_cm``
compares F_I with F_{I^cm} (I is convex-smaller). A layer [delta, epsilon]
inside a single region of one of these sets certifies on which side the
comonotone or countermonotone payoff sits.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from django.conf import settings
from django.db import models
from scipy import stats

from copulas.rng import open_unit
from distributions.empirical import EmpiricalDist, OrderVerdict, Sample, dispersive_order_check, median_difference
from layers.payoffs import LayerSpec
from longevity_bounds.exceptions import InvalidInputError
from .detection import classify_regions

logger = logging.getLogger(__name__)


class BoundRegime(models.TextChoices):
    PRESERVED = 'preserved', 'Comonotone lower, countermonotone upper'
    REVERSED = 'reversed', 'Comonotone upper, countermonotone lower'
    BOTH_UPPER = 'both_upper', 'Both extremes are upper bounds'
    BOTH_LOWER = 'both_lower', 'Both extremes are lower bounds'
    ONLY_CM_UPPER = 'only_cm_upper', 'Only countermonotone upper bound'
    ONLY_C_UPPER = 'only_c_upper', 'Only comonotone upper bound'
    ONLY_CM_LOWER = 'only_cm_lower', 'Only countermonotone lower bound'
    ONLY_C_LOWER = 'only_c_lower', 'Only comonotone lower bound'
    AMBIGUOUS = 'ambiguous', 'No bound certified'


class CrossingOrder(models.TextChoices):
    C_STAR_CM = 'c_star_cm', 'd_c < d_star < d_cm'
    CM_STAR_C = 'cm_star_c', 'd_cm < d_star < d_c'
    COINCIDE = 'coincide', 'All crossings coincide'
    VIOLATION = 'violation', 'Order violated'


@dataclass(frozen=True)
class CrossingTriple:
    d_c: float = None
    d_cm: float = None
    d_star: float = None

    @classmethod
    def from_sets(cls, cs_c, cs_cm, cs_star):
        return cls(d_c=cs_c.unique_point, d_cm=cs_cm.unique_point, d_star=cs_star.unique_point)

    @property
    def is_complete(self):
        return None not in (self.d_c, self.d_cm, self.d_star)


def _certified(cs, direction, layer):
    """Return (layer inside a <= region, layer inside a >= region)."""
    regions = classify_regions(cs, direction)
    in_le = any(region.contains_layer(layer) for region in regions.le)
    in_ge = any(region.contains_layer(layer) for region in regions.ge)
    return in_le, in_ge


def bound_regime(cs_c, cs_cm, layer):
    if not isinstance(layer, LayerSpec):
        raise InvalidInputError(f"Expected a LayerSpec, got {layer!r}")

    c_upper, c_lower = _certified(cs_c, 'first', layer)
    cm_lower, cm_upper = _certified(cs_cm, 'first', layer)

    if c_lower and cm_upper:
        return BoundRegime.PRESERVED
    if c_upper and cm_lower:
        return BoundRegime.REVERSED
    if c_upper and cm_upper:
        return BoundRegime.BOTH_UPPER
    if c_lower and cm_lower:
        return BoundRegime.BOTH_LOWER
    if cm_upper:
        return BoundRegime.ONLY_CM_UPPER
    if c_upper:
        return BoundRegime.ONLY_C_UPPER
    if cm_lower:
        return BoundRegime.ONLY_CM_LOWER
    if c_lower:
        return BoundRegime.ONLY_C_LOWER
    return BoundRegime.AMBIGUOUS


def regime_holds(regime, e_payoff, e_payoff_c, e_payoff_cm, tolerance=0.0):
    """Whether the expected payoffs sit on the sides ``regime`` claims."""
    regime = BoundRegime(regime)
    c_upper = e_payoff <= e_payoff_c + tolerance
    c_lower = e_payoff_c <= e_payoff + tolerance
    cm_upper = e_payoff <= e_payoff_cm + tolerance
    cm_lower = e_payoff_cm <= e_payoff + tolerance
    required = {
        BoundRegime.PRESERVED: (c_lower, cm_upper),
        BoundRegime.REVERSED: (c_upper, cm_lower),
        BoundRegime.BOTH_UPPER: (c_upper, cm_upper),
        BoundRegime.BOTH_LOWER: (c_lower, cm_lower),
        BoundRegime.ONLY_CM_UPPER: (cm_upper,),
        BoundRegime.ONLY_C_UPPER: (c_upper,),
        BoundRegime.ONLY_CM_LOWER: (cm_lower,),
        BoundRegime.ONLY_C_LOWER: (c_lower,),
        BoundRegime.AMBIGUOUS: (),
    }
    return all(required[regime])


def crossing_order(triple, band=None):
    if not triple.is_complete:
        raise InvalidInputError(f"Crossing order needs all three crossings, got {triple}")
    if band is None:
        band = getattr(settings, 'BOUNDS_ORDER_BAND', 1e-4)
    d_c, d_cm, d_star = triple.d_c, triple.d_cm, triple.d_star

    if max(abs(d_c - d_cm), abs(d_c - d_star), abs(d_cm - d_star)) <= band:
        return CrossingOrder.COINCIDE
    if d_c < d_cm and d_c <= d_star + band and d_star <= d_cm + band:
        return CrossingOrder.C_STAR_CM
    if d_cm < d_c and d_cm <= d_star + band and d_star <= d_c + band:
        return CrossingOrder.CM_STAR_C
    return CrossingOrder.VIOLATION


def dispersive_shortcut(s1, s2, grid=None):
    """
    Common crossing of the comonotone and countermonotone differences when
    the marginals are dispersively ordered, else None. Samples should have
    equal length.
    """
    verdict = dispersive_order_check(s1, s2, grid=grid)
    if verdict == OrderVerdict.NEITHER:
        return None
    return median_difference(s1, s2)


@dataclass(frozen=True)
class SymmetricLocationScaleSpec:
    """
    Marginals mu_i + sigma_i * W with W symmetric about zero. ``base`` is a
    frozen scipy distribution, a Sample or an EmpiricalDist; sample bases
    are checked for symmetry within a tolerance that shrinks like 1/sqrt(n).
    """
    mu1: float
    mu2: float
    sigma1: float
    sigma2: float
    base: object = None

    def __post_init__(self):
        for name in ('mu1', 'mu2', 'sigma1', 'sigma2'):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise InvalidInputError(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, value)
        if self.sigma1 <= 0 or self.sigma2 <= 0:
            raise InvalidInputError("Scales must be positive")
        if self.base is None:
            object.__setattr__(self, 'base', stats.norm())
        elif isinstance(self.base, Sample):
            object.__setattr__(self, 'base', self.base.dist())
        elif not isinstance(self.base, EmpiricalDist) and not hasattr(self.base, 'ppf'):
            raise InvalidInputError(f"Base must be a Sample, an EmpiricalDist or expose ppf, got {self.base!r}")

        if self.is_empirical:
            levels = np.linspace(0.05, 0.45, 41)
            spread = float(self.base_quantile(0.75) - self.base_quantile(0.25))
            atol = 10.0 * max(spread, np.finfo(float).tiny) / math.sqrt(self.base.n)
            rtol = 0.0
            logger.debug(f"Sample base with {self.base.n} draws, symmetry tolerance {atol:.3g}")
        else:
            levels = np.linspace(0.01, 0.49, 49)
            atol, rtol = 1e-9, 1e-6
        lower, upper = self.base_quantile(levels), self.base_quantile(1 - levels)
        if not np.allclose(lower, -upper, rtol=rtol, atol=atol):
            raise InvalidInputError("Base distribution must be symmetric about zero")

    @property
    def is_empirical(self):
        return isinstance(self.base, EmpiricalDist)

    def base_quantile(self, p):
        if self.is_empirical:
            return self.base.quantile(p)
        return self.base.ppf(p)

    def draw_marginals(self, n, seed):
        """Independent draws of both marginals from their own substreams."""
        w1 = self.base_quantile(open_unit(seed.generator('location_scale_1').random(n)))
        w2 = self.base_quantile(open_unit(seed.generator('location_scale_2').random(n)))
        return Sample(self.mu1 + self.sigma1 * w1), Sample(self.mu2 + self.sigma2 * w2)

    def marginals(self):
        """Both marginals built from the same base draws; sample bases only."""
        if not self.is_empirical:
            raise InvalidInputError("Shared-draw marginals need a sample base")
        w = self.base.values
        return Sample(self.mu1 + self.sigma1 * w), Sample(self.mu2 + self.sigma2 * w)


def symmetric_common_crossing(spec):
    return spec.mu1 - spec.mu2
