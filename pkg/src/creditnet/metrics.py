"""Node-level and population-level statistics on credit networks.

Covers concentration (participation ratio), neighbour degree, cumulative
distributions, correlation tests, term composition of borrowing, equally
populated size classes and ordinary least squares.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy import stats

from .errors import ConfigError, UndefinedMeasureError
from .graph import BipartiteGraph, Mode, NodeRef, Term

__all__ = [
    "CumulativeDistribution",
    "CorrelationResult",
    "RegressionResult",
    "participation_ratio",
    "participation_ratios",
    "assortativity",
    "assortativity_summary",
    "cumulative_distribution",
    "pearson",
    "kendall_tau",
    "kendall_tau_null_sigma",
    "term_share",
    "quantile_classes",
    "conditional_degree_distributions",
    "linear_regression",
    "strength_degree_correlations",
    "debt_asset_ratio",
    "capital_normalized_weights",
]


@dataclass(frozen=True)
class CumulativeDistribution:
    """Empirical ``P>(x)``: fraction of samples greater than or equal to x."""

    points: tuple[tuple[float, float], ...]
    sample_count: int

    @property
    def values(self) -> np.ndarray:
        return np.array([p[0] for p in self.points], dtype=float)

    @property
    def fractions(self) -> np.ndarray:
        return np.array([p[1] for p in self.points], dtype=float)

    def __call__(self, x: float) -> float:
        """Evaluate ``P>(x)`` at an arbitrary point."""
        v = self.values
        k = int(np.searchsorted(v, x, side="left"))
        return 0.0 if k == len(v) else self.points[k][1]


class CorrelationResult(NamedTuple):
    coefficient: float
    p_value: float | None
    sigma_multiple: float | None
    sample_count: int
    method: str


class RegressionResult(NamedTuple):
    slope: float
    intercept: float
    correlation_r: float


# ---------------------------------------------------------------------------
# node measures


def participation_ratio(g: BipartiteGraph, n: NodeRef, term: Term = Term.TOTAL) -> float:
    """Sum over the links of ``n`` of (link weight / node strength) squared.

    Ranges from ``1/k`` (all links equal) to 1 (one link carries everything).
    Links without a short/long split are ignored for ``Term.SHORT``/``LONG``.
    """
    ws = [g.edges[k][2].component(term) for k in g.incident(n)]
    ws = [x for x in ws if x is not None]
    if not ws:
        raise UndefinedMeasureError(f"participation ratio of isolated node {n!r}")
    s = math.fsum(ws)
    if s <= 0:
        raise UndefinedMeasureError(f"participation ratio of {n!r}: zero {term.value} strength")
    return math.fsum((x / s) ** 2 for x in ws)


def participation_ratios(g: BipartiteGraph, mode: Mode, term: Term = Term.TOTAL):
    """Participation ratio of every node where it is defined.

    Returns ``(indices, degrees, ratios)`` arrays; nodes with no usable
    link or zero strength are left out.
    """
    w = g.weights(term)
    ok = ~np.isnan(w)
    ends = g.edge_ends(mode)[ok]
    w = w[ok]
    n = g.count(mode)
    s = np.bincount(ends, weights=w, minlength=n)
    k = np.bincount(ends, minlength=n)
    defined = s > 0
    sq = np.bincount(ends, weights=(w / np.where(s[ends] > 0, s[ends], 1.0)) ** 2, minlength=n)
    idx = np.flatnonzero(defined)
    return idx, k[idx], sq[idx]


def assortativity(g: BipartiteGraph, n: NodeRef) -> float:
    """Mean degree of the neighbours of ``n``."""
    g.check(n)
    nbrs = g.neighbor_indices(n.mode)[n.index]
    if not nbrs:
        raise UndefinedMeasureError(f"assortativity of isolated node {n!r}")
    deg = g.degrees(n.mode.other)
    return float(deg[list(nbrs)].mean())


class AssortativitySummary(NamedTuple):
    knn: np.ndarray  # NaN for isolated nodes
    excluded: int


def assortativity_summary(g: BipartiteGraph, mode: Mode) -> AssortativitySummary:
    k_self = g.degrees(mode)
    k_other = g.degrees(mode.other)
    tot = np.bincount(
        g.edge_ends(mode), weights=k_other[g.edge_ends(mode.other)], minlength=g.count(mode)
    )
    with np.errstate(invalid="ignore", divide="ignore"):
        knn = np.where(k_self > 0, tot / k_self, np.nan)
    return AssortativitySummary(knn, int((k_self == 0).sum()))


# ---------------------------------------------------------------------------
# distributions


def cumulative_distribution(values: Sequence[float]) -> CumulativeDistribution:
    """Complementary cumulative distribution evaluated at each distinct sample.

    >>> cumulative_distribution([1, 2, 2, 4]).points
    ((1.0, 1.0), (2.0, 0.75), (4.0, 0.25))
    """
    x = np.asarray(values, dtype=float).ravel()
    if x.size == 0:
        raise UndefinedMeasureError("cumulative distribution of an empty sample")
    if not np.all(np.isfinite(x)) or np.any(x <= 0):
        raise ConfigError("cumulative distribution needs positive finite values")
    uniq, counts = np.unique(x, return_counts=True)
    n = x.size
    at_least = n - np.concatenate([[0], np.cumsum(counts)[:-1]])
    return CumulativeDistribution(
        tuple((float(v), float(c) / n) for v, c in zip(uniq, at_least)), n
    )


def quantile_classes(values: Sequence[float], k: int) -> np.ndarray:
    """Assign each value to one of ``k`` equally populated classes.

    Values are ranked with a stable sort (ties keep input order); rank ``r``
    goes to class ``floor(r * k / n)``. Class 0 holds the smallest values and
    class sizes differ by at most one.
    """
    x = np.asarray(values, dtype=float)
    n = x.size
    if k < 1:
        raise ConfigError("class count must be at least 1")
    if k > n:
        raise ConfigError(f"cannot split {n} values into {k} classes")
    order = np.argsort(x, kind="stable")
    labels = np.empty(n, dtype=np.int64)
    labels[order] = (np.arange(n) * k) // n
    return labels


def conditional_degree_distributions(
    g: BipartiteGraph, classes: Sequence[int], class_count: int | None = None
) -> list[CumulativeDistribution]:
    """Firm degree distribution within each class.

    ``classes`` gives a label in ``0..class_count-1`` per firm index, or a
    negative value for firms left out. Every firm with at least one link must
    be labelled; firms without links are ignored.
    """
    labels = np.asarray(classes, dtype=np.int64)
    if labels.shape != (g.firm_count,):
        raise ConfigError(f"need one class label per firm ({g.firm_count})")
    deg = g.degrees(Mode.FIRM)
    if np.any((deg > 0) & (labels < 0)):
        raise ConfigError("every borrowing firm must belong to a class")
    if class_count is None:
        class_count = int(labels.max()) + 1 if labels.size else 0
    out = []
    for c in range(class_count):
        sample = deg[(labels == c) & (deg > 0)]
        if sample.size == 0:
            raise UndefinedMeasureError(f"class {c} has no borrowing firms")
        out.append(cumulative_distribution(sample))
    return out


def term_share(g: BipartiteGraph, f: NodeRef) -> tuple[float, float]:
    """Short- and long-term fractions of a firm's borrowing.

    Only links with a short/long split contribute, so the two shares always
    add up to one.
    """
    if f.mode is not Mode.FIRM:
        raise ConfigError("term_share is defined for firms")
    s = l = 0.0
    for k in g.incident(f):
        w = g.edges[k][2]
        if w.has_split:
            s += w.short_term
            l += w.long_term
    tot = s + l
    if tot <= 0:
        raise UndefinedMeasureError(f"firm {f!r} has no split borrowing")
    short = s / tot
    return short, 1.0 - short


# ---------------------------------------------------------------------------
# correlation and regression


def _paired(xs, ys, minimum):
    x = np.asarray(xs, dtype=float).ravel()
    y = np.asarray(ys, dtype=float).ravel()
    if x.shape != y.shape:
        raise ConfigError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < minimum:
        raise UndefinedMeasureError(f"need at least {minimum} pairs, got {x.size}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ConfigError("non-finite values in correlation input")
    return x, y


def pearson(xs, ys) -> CorrelationResult:
    """Sample Pearson coefficient with a two-sided Student-t p-value.

    The statistic is ``t = r * sqrt((N - 2) / (1 - r**2))`` with ``N - 2``
    degrees of freedom.
    """
    x, y = _paired(xs, ys, 3)
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise UndefinedMeasureError("correlation of a constant sequence")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    n = x.size
    if abs(r) == 1.0:
        p = 0.0
    else:
        t = r * math.sqrt((n - 2) / (1.0 - r * r))
        p = float(2.0 * stats.t.sf(abs(t), n - 2))
    return CorrelationResult(r, min(p, 1.0), None, n, "pearson")


def _count_inversions(seq: list) -> int:
    """Number of pairs i < j with seq[i] > seq[j] (bottom-up merge sort)."""
    n = len(seq)
    src = list(seq)
    buf = [None] * n
    inv = 0
    width = 1
    while width < n:
        for lo in range(0, n, 2 * width):
            mid = min(lo + width, n)
            hi = min(lo + 2 * width, n)
            i, j, k = lo, mid, lo
            while i < mid and j < hi:
                if src[j] < src[i]:
                    buf[k] = src[j]
                    inv += mid - i
                    j += 1
                else:
                    buf[k] = src[i]
                    i += 1
                k += 1
            buf[k:hi] = src[i:mid] if i < mid else src[j:hi]
        src, buf = buf, src
        width *= 2
    return inv


def _tie_pairs(sorted_keys) -> int:
    total = 0
    run = 1
    for a, b in zip(sorted_keys, sorted_keys[1:]):
        if a == b:
            run += 1
        else:
            total += run * (run - 1) // 2
            run = 1
    return total + run * (run - 1) // 2


def kendall_tau_null_sigma(n: int) -> float:
    """Standard deviation of tau under independence, ignoring ties."""
    return math.sqrt(2.0 * (2 * n + 5) / (9.0 * n * (n - 1)))


def kendall_tau(xs, ys) -> CorrelationResult:
    """Kendall tau-b (tie corrected) and its size in units of the null sigma.

    Uses Knight's O(n log n) pair counting. ``sigma_multiple`` divides tau by
    ``sqrt(2(2n+5) / (9n(n-1)))``, the no-ties null standard deviation;
    ``p_value`` is left as ``None``.
    """
    x, y = _paired(xs, ys, 2)
    n = x.size
    order = np.lexsort((y, x))
    xs_sorted = x[order].tolist()
    ys_by_x = y[order].tolist()
    n0 = n * (n - 1) // 2
    n1 = _tie_pairs(xs_sorted)
    pairs = list(zip(xs_sorted, ys_by_x))
    n3 = _tie_pairs(pairs)
    discordant = _count_inversions(ys_by_x)
    n2 = _tie_pairs(sorted(ys_by_x))
    if n0 == n1 or n0 == n2:
        raise UndefinedMeasureError("Kendall tau undefined: a sequence is entirely tied")
    concordant = n0 - n1 - n2 + n3 - discordant
    prod = (n0 - n1) * (n0 - n2)
    root = math.isqrt(prod)
    # exact root when there are no ties (or equal tie counts), so tau hits +-1 exactly
    denom = root if root * root == prod else math.sqrt(prod)
    tau = (concordant - discordant) / denom
    tau = max(-1.0, min(1.0, tau))
    return CorrelationResult(tau, None, tau / kendall_tau_null_sigma(n), n, "kendall-tau-b")


def linear_regression(xs, ys) -> RegressionResult:
    """Ordinary least squares fit ``y = slope * x + intercept``."""
    x, y = _paired(xs, ys, 3)
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0:
        raise UndefinedMeasureError("regression on constant x")
    if syy == 0:
        raise UndefinedMeasureError("correlation undefined for constant y")
    sxy = float(dx @ dy)
    slope = sxy / sxx
    intercept = float(y.mean() - slope * x.mean())
    r = max(-1.0, min(1.0, sxy / math.sqrt(sxx * syy)))
    return RegressionResult(slope, intercept, r)


def strength_degree_correlations(
    g: BipartiteGraph, mode: Mode, term: Term = Term.TOTAL
) -> dict[str, CorrelationResult]:
    """Pearson correlation of strength against degree, on raw and log values.

    Nodes without links, or with zero strength for the chosen term, are
    dropped before either computation.
    """
    k = g.degrees(mode).astype(float)
    s = g.strengths(mode, term)
    keep = (k > 0) & (s > 0)
    k, s = k[keep], s[keep]
    return {"raw": pearson(k, s), "log": pearson(np.log(k), np.log(s))}


# ---------------------------------------------------------------------------
# balance-sheet derived quantities


def debt_asset_ratio(debt, asset=None, capital=None, asset_source: str = "reported") -> np.ndarray:
    """Debt-on-asset ratio per firm, NaN where it cannot be computed.

    ``asset_source="reported"`` divides by the reported asset;
    ``"capital_minus_debt"`` uses ``capital - debt`` as the denominator.
    Missing entries may be given as ``None`` or NaN.
    """
    d = np.asarray(debt, dtype=float)
    if asset_source == "reported":
        if asset is None:
            raise ConfigError("reported asset values required")
        a = np.asarray(asset, dtype=float)
    elif asset_source == "capital_minus_debt":
        if capital is None:
            raise ConfigError("capital values required")
        a = np.asarray(capital, dtype=float) - d
    else:
        raise ConfigError(f"unknown asset_source {asset_source!r}")
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(np.isfinite(d) & np.isfinite(a) & (a > 0), d / a, np.nan)


def capital_normalized_weights(
    g: BipartiteGraph, capital_by_node, by: Mode = Mode.FIRM, term: Term = Term.TOTAL
) -> np.ndarray:
    """Link weights divided by the capital of one endpoint.

    ``capital_by_node`` is indexed like the nodes of mode ``by`` (firms by
    default). Links whose endpoint capital is missing or nonpositive are
    dropped.
    """
    cap = np.asarray(capital_by_node, dtype=float)
    if cap.shape != (g.count(by),):
        raise ConfigError(f"need one capital value per {by.value}")
    w = g.weights(term)
    c = cap[g.edge_ends(by)]
    ok = np.isfinite(w) & np.isfinite(c) & (c > 0)
    return w[ok] / c[ok]
