"""Synthetic bank-firm credit networks with heavy-tailed degrees and amounts.

Construction
------------
1. Firm degrees are drawn from a discrete power law ``p(k) ~ k**-(mu + 1)``
   truncated at the number of banks. Its lower end is tuned so that the
   expected degree equals ``mean_firm_degree``.
2. Each bank gets a fixed size factor drawn from a Pareto law. Firm stubs
   are attached one at a time to banks chosen with probability proportional
   to ``size * (bank degree + attachment_offset)``. A stub that hits a bank
   the firm already borrows from is redrawn, at most ``max_retries`` times,
   and then dropped.
3. Each link gets a Pareto amount ``weight_min * U**(-1/weight_exponent)``
   split into short and long term by a uniform ratio.

Node counts, bank types and firm sectors default to the 2004 composition of
the Japanese market (190 banks, 2,701 listed firms).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConfigError
from .graph import BipartiteGraph, EdgeWeight, Mode
from .ingest import SECTORS, BankInfo, FirmInfo, NodeAttributes

logger = logging.getLogger(__name__)

__all__ = ["GeneratorConfig", "SynthReport", "degree_law", "generate", "generate_with_report"]

# bank type code -> 2004 count
BANK_TYPE_COUNTS_2004 = {2: 7, 3: 64, 5: 50, 4: 9, 1: 2, 6: 58}

FIRM_SECTOR_COUNTS_2004 = dict(
    zip(
        SECTORS,
        (
            113, 55, 23, 154, 23, 9, 23, 62, 47, 100, 196, 206, 6, 61, 13, 47, 95,
            8, 7, 168, 299, 220, 13, 69, 93, 31, 35, 19, 4, 38, 26, 9, 12, 417,
        ),
    )
)

_REGIONAL_TYPES = (3, 5)


@dataclass(frozen=True)
class GeneratorConfig:
    """Generator parameters; defaults reproduce the 2004 market at full scale.

    Parameters
    ----------
    firm_degree_exponent
        Cumulative tail exponent of firm degrees.
    weight_exponent
        Cumulative tail exponent of link amounts.
    scale
        Fraction of ``bank_count`` and ``firm_count`` actually generated.
    split_range
        Bounds of the uniform short-term share of each link.
    attachment_offset
        Added to bank degrees in the attachment weights.
    bank_size_exponent
        Tail exponent of the bank size factors; ``None`` gives every bank
        the same size, which leaves pure degree-preferential attachment.
    """

    bank_count: int = 190
    firm_count: int = 2701
    firm_degree_exponent: float = 2.6
    mean_firm_degree: float = 8.0
    weight_exponent: float = 0.95
    weight_min: float = 100.0
    seed: int = 0
    scale: float = 1.0
    split_range: tuple[float, float] = (0.0, 1.0)
    attachment_offset: float = 1.0
    bank_size_exponent: float | None = 3.0
    max_retries: int = 20

    def __post_init__(self):
        for name in ("bank_count", "firm_count", "max_retries"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
                raise ConfigError(f"{name} must be an integer")
        if self.bank_count < 1 or self.firm_count < 1:
            raise ConfigError("node counts must be at least 1")
        if self.max_retries < 0:
            raise ConfigError("max_retries must be nonnegative")
        for name in ("firm_degree_exponent", "weight_exponent", "weight_min", "attachment_offset"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.bank_size_exponent is not None and not self.bank_size_exponent > 0:
            raise ConfigError("bank_size_exponent must be positive")
        if not 0 < self.scale <= 1:
            raise ConfigError("scale must lie in (0, 1]")
        if not (isinstance(self.seed, (int, np.integer)) and 0 <= self.seed < 2**64):
            raise ConfigError("seed must be an integer in [0, 2**64)")
        lo, hi = self.split_range
        if not 0 <= lo <= hi <= 1:
            raise ConfigError("split_range must satisfy 0 <= low <= high <= 1")
        if not 1 <= self.mean_firm_degree <= self.banks:
            raise ConfigError(
                f"mean firm degree {self.mean_firm_degree} infeasible with {self.banks} banks"
            )

    @property
    def banks(self) -> int:
        return max(1, round(self.bank_count * self.scale))

    @property
    def firms(self) -> int:
        return max(1, round(self.firm_count * self.scale))


class SynthReport(NamedTuple):
    dropped_stubs: int
    kmin: int
    kmax: int


def _truncated_pmf(mu, lo, hi):
    k = np.arange(lo, hi + 1)
    p = k ** -(mu + 1.0)
    return k, p / p.sum()


def _mean(mu, lo, hi):
    k, p = _truncated_pmf(mu, lo, hi)
    return float(k @ p)


def degree_law(mu: float, mean: float, kmax: int):
    """Support and probabilities of the firm-degree law.

    Mixes the power laws on ``[a, kmax]`` and ``[a + 1, kmax]`` so the
    expected degree is ``mean``. When even the law on ``[1, kmax]`` is too
    wide, the upper end is lowered instead, mixing ``[1, b]`` and
    ``[1, b + 1]``.
    """
    if not 1 <= mean <= kmax:
        raise ConfigError(f"mean degree {mean} outside [1, {kmax}]")
    if _mean(mu, 1, kmax) <= mean:
        a = 1
        while a < kmax and _mean(mu, a + 1, kmax) <= mean:
            a += 1
        lo, hi = (a, kmax), (min(a + 1, kmax), kmax)
    else:
        b = 1
        while _mean(mu, 1, b + 1) <= mean:
            b += 1
        lo, hi = (1, b), (1, b + 1)
    m_lo, m_hi = _mean(mu, *lo), _mean(mu, *hi)
    lam = 1.0 if m_hi == m_lo else (m_hi - mean) / (m_hi - m_lo)
    k = np.arange(1, kmax + 1)
    p = np.zeros(kmax)
    for (a, b), share in ((lo, lam), (hi, 1.0 - lam)):
        ks, ps = _truncated_pmf(mu, a, b)
        p[ks - 1] += share * ps
    keep = p > 0
    return k[keep], p[keep] / p[keep].sum()


def _allocate(counts: dict, total: int, rng) -> list:
    """Labels in proportion to ``counts`` (largest remainder), shuffled."""
    keys = list(counts)
    w = np.array([counts[k] for k in keys], dtype=float)
    exact = w / w.sum() * total
    n = np.floor(exact).astype(int)
    rest = total - n.sum()
    n[np.argsort(-(exact - n), kind="stable")[:rest]] += 1
    labels = [k for k, c in zip(keys, n) for _ in range(c)]
    rng.shuffle(labels)
    return labels


def _attach(degrees, size, offset, retries, rng):
    n_banks = size.size
    bank_deg = np.zeros(n_banks)
    edges, dropped = [], 0
    u = rng.random
    for f, d in enumerate(degrees.tolist()):
        mine = set()
        for _ in range(d):
            for _ in range(retries + 1):
                c = np.cumsum(size * (bank_deg + offset))
                b = int(np.searchsorted(c, u() * c[-1], side="right"))
                b = min(b, n_banks - 1)
                if b not in mine:
                    break
            else:
                dropped += 1
                continue
            mine.add(b)
            bank_deg[b] += 1
            edges.append((b, f))
    return edges, dropped


def generate_with_report(cfg: GeneratorConfig = GeneratorConfig()):
    """Like :func:`generate` but also returns a :class:`SynthReport`."""
    rng = np.random.default_rng(cfg.seed)
    nb, nf = cfg.banks, cfg.firms
    ks, ps = degree_law(cfg.firm_degree_exponent, cfg.mean_firm_degree, nb)
    degrees = rng.choice(ks, size=nf, p=ps)
    if cfg.bank_size_exponent is None:
        size = np.ones(nb)
    else:
        size = (1.0 - rng.random(nb)) ** (-1.0 / cfg.bank_size_exponent)
    pairs, dropped = _attach(degrees, size, cfg.attachment_offset, cfg.max_retries, rng)
    if dropped:
        logger.info("dropped %d stubs after %d retries", dropped, cfg.max_retries)

    m = len(pairs)
    amounts = cfg.weight_min * (1.0 - rng.random(m)) ** (-1.0 / cfg.weight_exponent)
    lo, hi = cfg.split_range
    share = rng.uniform(lo, hi, m)
    edges = []
    for (b, f), a, s in zip(pairs, amounts.tolist(), share.tolist()):
        short = a * s
        edges.append((b, f, EdgeWeight.split(short, a - short)))

    bank_ids = [f"B{k:0{len(str(nb))}d}" for k in range(1, nb + 1)]
    firm_ids = [f"F{k:0{len(str(nf))}d}" for k in range(1, nf + 1)]
    g = BipartiteGraph(bank_ids, firm_ids, edges)
    attrs = _attributes(g, rng)
    return g, attrs, SynthReport(dropped, int(ks.min()), int(ks.max()))


def generate(cfg: GeneratorConfig = GeneratorConfig()) -> tuple[BipartiteGraph, NodeAttributes]:
    """Draw a synthetic credit network and matching node attributes.

    Identical configurations give identical outputs.

    Examples
    --------
    >>> g, attrs = generate(GeneratorConfig(bank_count=3, firm_count=1, mean_firm_degree=1))
    >>> g.edge_count
    1
    """
    g, attrs, _ = generate_with_report(cfg)
    return g, attrs


def _attributes(g: BipartiteGraph, rng) -> NodeAttributes:
    """Bank types, regions and firm balance sheets consistent with the links.

    Firm debt equals total borrowing; assets follow from a uniform
    debt-to-asset ratio in [0.2, 0.95]. Bank assets are a lognormal multiple
    of lending, with capital a uniform 3-10% of assets.
    """
    types = _allocate(BANK_TYPE_COUNTS_2004, g.bank_count, rng)
    regions = rng.integers(1, 8, g.bank_count)
    lend = g.strengths(Mode.BANK)
    bank_asset = np.maximum(lend, 1.0) * rng.lognormal(0.7, 0.3, g.bank_count)
    bank_cap = bank_asset * rng.uniform(0.03, 0.10, g.bank_count)
    banks = {
        x: BankInfo(
            f"Bank {x[1:]}",
            t,
            int(r) if t in _REGIONAL_TYPES else 0,
            round(float(c), 3),
            round(float(a), 3),
        )
        for x, t, r, c, a in zip(g.bank_ids, types, regions, bank_cap, bank_asset)
    }
    sectors = _allocate(FIRM_SECTOR_COUNTS_2004, g.firm_count, rng)
    debt = g.strengths(Mode.FIRM)
    dar = rng.uniform(0.2, 0.95, g.firm_count)
    firms = {}
    for x, s, d, r in zip(g.firm_ids, sectors, debt.tolist(), dar.tolist()):
        d = round(d, 3)
        asset = round(d / r, 3) if d > 0 else round(float(rng.uniform(10, 1000)), 3)
        firms[x] = FirmInfo(f"Firm {x[1:]}", s, asset, d, round(asset - d, 3))
    return NodeAttributes(banks, firms)

