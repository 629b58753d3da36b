"""
Copula sampling and rank reordering.

Marginal samples are simulated once; a copula only decides how their draws
are paired. ``rank_reorder`` pairs the draws by the ranks of copula uniforms,
``extreme_transform`` builds the comonotone and countermonotone pairings
directly from the sorted samples.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from django.db import models
from scipy import stats

from distributions.empirical import Sample
from longevity_bounds.exceptions import InvalidInputError
from .rng import draw_chunked, open_unit

logger = logging.getLogger(__name__)


class CopulaKind(models.TextChoices):
    GAUSSIAN = 'gaussian', 'Gaussian'
    CLAYTON = 'clayton', 'Clayton'
    INDEPENDENCE = 'independence', 'Independence'
    COMONOTONE = 'comonotone', 'Comonotone'
    COUNTERMONOTONE = 'countermonotone', 'Countermonotone'


PARAMETRIC_KINDS = (CopulaKind.GAUSSIAN, CopulaKind.CLAYTON)
EXTREME_KINDS = (CopulaKind.COMONOTONE, CopulaKind.COUNTERMONOTONE)


@dataclass(frozen=True)
class CopulaSpec:
    kind: str
    param: float = None

    def __post_init__(self):
        if self.kind not in CopulaKind.values:
            raise InvalidInputError(f"Unknown copula kind '{self.kind}'")
        object.__setattr__(self, 'kind', CopulaKind(self.kind))

        if self.kind in PARAMETRIC_KINDS:
            if self.param is None:
                raise InvalidInputError(f"A {self.kind} copula needs a parameter")
            param = float(self.param)
            if not math.isfinite(param):
                raise InvalidInputError(f"Copula parameter must be finite, got {self.param}")
            if self.kind == CopulaKind.GAUSSIAN and not -1.0 <= param <= 1.0:
                raise InvalidInputError(f"Gaussian correlation must lie in [-1, 1], got {param}")
            if self.kind == CopulaKind.CLAYTON and param <= 0:
                raise InvalidInputError(f"Clayton parameter must be positive, got {param}")
            object.__setattr__(self, 'param', param)
        elif self.param is not None:
            raise InvalidInputError(f"A {self.kind} copula takes no parameter")

    @classmethod
    def parse(cls, text):
        """Parse ``kind`` or ``kind:param`` (e.g. ``gaussian:-0.5``)."""
        kind, _, param = str(text).strip().partition(':')
        kind = kind.strip().lower()
        if not param.strip():
            return cls(kind)
        try:
            value = float(param)
        except ValueError:
            raise InvalidInputError(f"Copula parameter in '{text}' is not a number")
        return cls(kind, value)

    @property
    def label(self):
        if self.param is None:
            return str(self.kind.value)
        return f"{self.kind.value}_{self.param:g}"

    def __str__(self):
        return self.label


@dataclass(frozen=True, eq=False)
class PairedSample:
    """Aligned draws (first[i], second[i]) sharing one dependence structure"""
    first: np.ndarray
    second: np.ndarray

    def __post_init__(self):
        first = np.asarray(self.first, dtype=float).ravel().copy()
        second = np.asarray(self.second, dtype=float).ravel().copy()
        if first.size != second.size:
            raise InvalidInputError(
                f"Paired sample needs equal lengths, got {first.size} and {second.size}"
            )
        if first.size == 0:
            raise InvalidInputError("Paired sample needs at least one pair")
        if not (np.all(np.isfinite(first)) and np.all(np.isfinite(second))):
            raise InvalidInputError("Paired sample values must be finite")
        first.setflags(write=False)
        second.setflags(write=False)
        object.__setattr__(self, 'first', first)
        object.__setattr__(self, 'second', second)

    def __len__(self):
        return self.first.size

    @property
    def n(self):
        return self.first.size


def _clayton_pairs(theta):
    def fill(rng, size):
        u, w = open_unit(rng.random((size, 2))).T
        v = np.power(u ** (-theta) * (w ** (-theta / (1 + theta)) - 1) + 1, -1 / theta)
        return np.column_stack([u, v])
    return fill


def _gaussian_pairs(rho):
    scale = math.sqrt(max(0.0, 1.0 - rho * rho))

    def fill(rng, size):
        z1, z = rng.standard_normal((size, 2)).T
        z2 = rho * z1 + scale * z
        return stats.norm.cdf(np.column_stack([z1, z2]))
    return fill


def _independent_pairs(rng, size):
    return rng.random((size, 2))


def _comonotone_pairs(rng, size):
    u = rng.random(size)
    return np.column_stack([u, u])


def _countermonotone_pairs(rng, size):
    u = open_unit(rng.random(size))
    return np.column_stack([u, 1.0 - u])


def sample_copula(spec, n, seed, stream=None, workers=None):
    """
    Draw ``n`` uniform pairs from the copula, as an (n, 2) array in (0, 1)^2.

    The stream defaults to the copula label so each copula in a scenario
    draws from its own substream.
    """
    if not isinstance(spec, CopulaSpec):
        raise InvalidInputError(f"Expected a CopulaSpec, got {spec!r}")
    if n < 1:
        raise InvalidInputError(f"Number of pairs must be at least 1, got {n}")

    if spec.kind == CopulaKind.GAUSSIAN:
        fill = _gaussian_pairs(spec.param)
    elif spec.kind == CopulaKind.CLAYTON:
        fill = _clayton_pairs(spec.param)
    elif spec.kind == CopulaKind.COMONOTONE:
        fill = _comonotone_pairs
    elif spec.kind == CopulaKind.COUNTERMONOTONE:
        fill = _countermonotone_pairs
    else:
        fill = _independent_pairs

    pairs = draw_chunked(seed, spec.label if stream is None else stream, n, fill, workers=workers)
    return open_unit(pairs)


def _ranks(values):
    # ties keep their original order
    order = np.argsort(values, kind='stable')
    ranks = np.empty_like(order)
    ranks[order] = np.arange(order.size)
    return ranks


def rank_reorder(s1, s2, uniforms):
    """Pair the k-th smallest draws with the copula pairs of matching rank."""
    uniforms = np.asarray(uniforms, dtype=float)
    if uniforms.ndim != 2 or uniforms.shape[1] != 2:
        raise InvalidInputError("Copula uniforms must be an (n, 2) array")
    if not s1.n == s2.n == uniforms.shape[0]:
        raise InvalidInputError(
            f"Length mismatch: {s1.n} and {s2.n} draws for {uniforms.shape[0]} copula pairs"
        )
    return PairedSample(
        first=s1.values[_ranks(uniforms[:, 0])],
        second=s2.values[_ranks(uniforms[:, 1])],
    )


def extreme_transform(s1, s2, kind):
    if s1.n != s2.n:
        raise InvalidInputError(f"Length mismatch: {s1.n} and {s2.n} draws")
    if kind == CopulaKind.COMONOTONE:
        return PairedSample(first=s1.values, second=s2.values)
    if kind == CopulaKind.COUNTERMONOTONE:
        return PairedSample(first=s1.values, second=s2.values[::-1])
    raise InvalidInputError(f"Extreme transform needs comonotone or countermonotone, got '{kind}'")


def reorder(s1, s2, spec, seed, stream=None, workers=None):
    """Pair the two samples under ``spec``; the extremes pair rank k with k or with n - 1 - k."""
    if not isinstance(spec, CopulaSpec):
        raise InvalidInputError(f"Expected a CopulaSpec, got {spec!r}")
    if spec.kind in EXTREME_KINDS:
        return extreme_transform(s1, s2, spec.kind)
    return rank_reorder(s1, s2, sample_copula(spec, s1.n, seed, stream=stream, workers=workers))


def difference(pairs):
    """Sorted sample of first - second."""
    return Sample(pairs.first - pairs.second)
