"""
Layer payoffs and stop-loss transforms.

A layer pays ``B / (eps - delta) * ((x - delta)+ - (x - eps)+)``, so its
expected payoff is a scaled difference of two stop-loss transforms.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from longevity_bounds.exceptions import InvalidInputError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LayerSpec:
    """Attachment ``delta``, exhaustion ``epsilon`` and principal ``B``"""
    delta: float
    epsilon: float
    principal: float = None

    def __post_init__(self):
        delta, epsilon = float(self.delta), float(self.epsilon)
        if not (math.isfinite(delta) and math.isfinite(epsilon)):
            raise InvalidInputError("Layer attachment and exhaustion must be finite")
        if not delta < epsilon:
            raise InvalidInputError(
                f"Layer attachment must lie below exhaustion, got {delta} >= {epsilon}"
            )
        principal = epsilon - delta if self.principal is None else float(self.principal)
        if not (math.isfinite(principal) and principal > 0):
            raise InvalidInputError(f"Layer principal must be positive, got {self.principal}")
        object.__setattr__(self, 'delta', delta)
        object.__setattr__(self, 'epsilon', epsilon)
        object.__setattr__(self, 'principal', principal)

    @property
    def width(self):
        return self.epsilon - self.delta

    @property
    def slope(self):
        return self.principal / self.width

    def shifted(self, amount):
        return LayerSpec(self.delta + amount, self.epsilon + amount, self.principal)


@dataclass(frozen=True)
class SpreadReport:
    e_cm: float
    e_c: float
    spread: float
    spread_pct_of_max: float

    @property
    def sign(self):
        """+1 when the countermonotone payoff is larger, -1 when smaller, 0 on ties"""
        return int(np.sign(self.spread))


def _check_layer(layer):
    if not isinstance(layer, LayerSpec):
        raise InvalidInputError(f"Expected a LayerSpec, got {layer!r}")


def layer_payoff(x, layer):
    _check_layer(layer)
    x = np.asarray(x, dtype=float)
    payoff = np.where(
        x >= layer.epsilon,
        layer.principal,
        np.where(x <= layer.delta, 0.0, layer.slope * (x - layer.delta)),
    )
    return float(payoff) if payoff.ndim == 0 else payoff


def stop_loss(sample, retention):
    """Mean of (value - retention)+ over the sample"""
    excess = np.maximum(sample.values - float(retention), 0.0)
    return math.fsum(excess) / sample.n


def stop_loss_curve(sample, retentions):
    """Stop-loss transform at many retentions at once, via tail sums of the sorted draws."""
    retentions = np.asarray(retentions, dtype=float)
    values = sample.values
    tail_sums = np.concatenate([np.cumsum(values[::-1])[::-1], [0.0]])
    above = np.searchsorted(values, retentions, side='right')
    curve = (tail_sums[above] - (sample.n - above) * retentions) / sample.n
    return np.maximum(curve, 0.0)


def expected_layer_payoff(sample, layer):
    _check_layer(layer)
    mean = math.fsum(np.atleast_1d(layer_payoff(sample.values, layer))) / sample.n
    return min(max(mean, 0.0), layer.principal)


def layer_payoff_curve(sample, deltas, width, principal=None):
    """
    Expected payoff of layers [delta, delta + width] for every delta.

    Uses the stop-loss identity, so the whole sweep costs one sort.
    """
    deltas = np.asarray(deltas, dtype=float)
    if not width > 0:
        raise InvalidInputError(f"Layer width must be positive, got {width}")
    principal = width if principal is None else float(principal)
    curve = principal / width * (stop_loss_curve(sample, deltas) - stop_loss_curve(sample, deltas + width))
    return np.clip(curve, 0.0, principal)


def uncertainty_spread(sample_cm, sample_c, layer):
    _check_layer(layer)
    e_cm = expected_layer_payoff(sample_cm, layer)
    e_c = expected_layer_payoff(sample_c, layer)
    spread = e_cm - e_c
    return SpreadReport(
        e_cm=e_cm,
        e_c=e_c,
        spread=spread,
        spread_pct_of_max=100.0 * spread / layer.principal,
    )
