"""Maximum-likelihood (Hill) estimation of power-law tail exponents.

Exponents follow the cumulative convention: a fitted ``mu`` means
``P>(x) ~ x**(-mu)``; the density exponent is ``mu + 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

from .errors import ConfigError, UndefinedMeasureError

__all__ = [
    "TailFit",
    "FixedQuantile",
    "Explicit",
    "hill_fit",
    "select_cutoff",
    "fit_tail",
]

CONVENTION = "cumulative"


class TailFit(NamedTuple):
    mu_hat: float
    std_error: float
    cutoff: float
    tail_count: int
    discrete: bool = False

    @property
    def density_exponent(self) -> float:
        return self.mu_hat + 1.0


@dataclass(frozen=True)
class FixedQuantile:
    q: float = 0.5


@dataclass(frozen=True)
class Explicit:
    x: float


CutoffStrategy = Union[FixedQuantile, Explicit]


def _positive(values) -> np.ndarray:
    x = np.asarray(values, dtype=float).ravel()
    if x.size == 0:
        raise UndefinedMeasureError("no samples")
    if not np.all(np.isfinite(x)) or np.any(x <= 0):
        raise ConfigError("tail fitting needs positive finite values")
    return x


def hill_fit(values, cutoff: float, discrete: bool = False) -> TailFit:
    """Hill estimate of the cumulative tail exponent above ``cutoff``.

    ``mu_hat = n / sum(log(x / cutoff))`` over the ``n`` samples ``x >= cutoff``,
    with standard error ``mu_hat / sqrt(n)``.

    For integer data such as degrees pass ``discrete=True``: the tail is still
    ``x >= cutoff`` but logarithms are taken relative to ``cutoff - 1/2``,
    the usual continuous approximation to the discrete power-law likelihood.
    """
    x = _positive(values)
    if not (math.isfinite(cutoff) and cutoff > 0):
        raise ConfigError(f"cutoff must be positive, got {cutoff!r}")
    if discrete and cutoff <= 0.5:
        raise ConfigError("discrete cutoff must exceed 1/2")
    tail = x[x >= cutoff]
    n = int(tail.size)
    if n < 2:
        raise UndefinedMeasureError(f"only {n} sample(s) at or above cutoff {cutoff!r}")
    ref = cutoff - 0.5 if discrete else cutoff
    logsum = math.fsum(np.log(tail / ref))
    if logsum <= 0:
        raise UndefinedMeasureError("all tail samples equal the cutoff; estimate diverges")
    mu = n / logsum
    return TailFit(mu, mu / math.sqrt(n), float(cutoff), n, discrete)


def select_cutoff(values, strategy: CutoffStrategy = FixedQuantile()) -> float:
    """Pick the lower end of the fitted range.

    ``FixedQuantile(q)`` returns the inverted-CDF empirical quantile, i.e. the
    smallest sample ``x`` with at least ``q * n`` samples ``<= x``; the result
    is always one of the samples (50 for q=0.5 on 1..100).
    ``Explicit(x)`` returns ``x`` unchanged.
    """
    if isinstance(strategy, Explicit):
        if not strategy.x > 0:
            raise ConfigError("explicit cutoff must be positive")
        return float(strategy.x)
    if isinstance(strategy, FixedQuantile):
        if not 0 < strategy.q < 1:
            raise ConfigError(f"quantile must lie in (0, 1), got {strategy.q!r}")
        x = np.asarray(values, dtype=float).ravel()
        if x.size == 0:
            raise UndefinedMeasureError("no samples")
        return float(np.quantile(x, strategy.q, method="inverted_cdf"))
    raise ConfigError(f"unknown cutoff strategy {strategy!r}")


def fit_tail(values, strategy: CutoffStrategy = FixedQuantile(), discrete: bool = False) -> TailFit:
    """Drop nonpositive samples, choose a cutoff, and run :func:`hill_fit`."""
    x = np.asarray(values, dtype=float).ravel()
    x = x[np.isfinite(x) & (x > 0)]
    return hill_fit(x, select_cutoff(x, strategy), discrete=discrete)
