"""Static long-range shortcut tables and query popularity distributions."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _kernels
from .basegraph import BaseGraph


class AugmentError(ValueError):
    pass


@dataclass(eq=False)
class ShortcutTable:
    """``targets[x]`` lists the shortcut targets of vertex x (constant out-degree).

    A target equal to its own source marks a slot with no useful link; it
    only appears in the initial state of the rewiring dynamic.
    """

    targets: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.targets, dtype=np.int64)
        if t.ndim == 1:
            t = t[:, None]
        if t.ndim != 2 or t.shape[1] < 1:
            raise AugmentError("shortcut table must be (n, out_degree) with out_degree >= 1")
        if t.size and (t.min() < 0 or t.max() >= t.shape[0]):
            raise AugmentError("shortcut target out of range")
        self.targets = np.ascontiguousarray(t)

    @property
    def n(self) -> int:
        return self.targets.shape[0]

    @property
    def out_degree(self) -> int:
        return self.targets.shape[1]

    def __getitem__(self, x: int) -> np.ndarray:
        return self.targets[x]

    def copy(self) -> "ShortcutTable":
        return ShortcutTable(self.targets.copy())

    def in_degree(self) -> np.ndarray:
        return np.bincount(self.targets.ravel(), minlength=self.n)

    def self_loop_fraction(self) -> float:
        return float(np.mean(self.targets == np.arange(self.n)[:, None]))

    def __eq__(self, other):
        return isinstance(other, ShortcutTable) and np.array_equal(self.targets, other.targets)


# -- popularity ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PopularityDist:
    """Query-target law: P(x) proportional to ``position(x) ** -beta``.

    ``ranking[i]`` is the vertex at popularity position i + 1. With
    ``beta == 0`` (or no ranking) the law is uniform over all n vertices.
    """

    n: int
    beta: float = 0.0
    ranking: np.ndarray | None = None

    def __post_init__(self):
        if self.n < 1:
            raise AugmentError("popularity needs n >= 1")
        if not self.beta >= 0:
            raise AugmentError("beta must be >= 0")
        if self.ranking is not None:
            r = np.asarray(self.ranking, dtype=np.int64)
            if r.shape != (self.n,) or not np.array_equal(np.sort(r), np.arange(self.n)):
                raise AugmentError("ranking must be a permutation of the vertex ids")
            object.__setattr__(self, "ranking", r)
        elif self.beta != 0:
            raise AugmentError("a power law needs a ranking")

    @classmethod
    def uniform(cls, n: int) -> "PopularityDist":
        return cls(n)

    @classmethod
    def power_law(cls, n: int, beta: float, seed=None, ranking=None) -> "PopularityDist":
        """Power law over a random popularity order (or the given ``ranking``)."""
        if ranking is None:
            ranking = np.random.default_rng(seed).permutation(n)
        return cls(n, float(beta), ranking)

    @property
    def is_uniform(self) -> bool:
        return self.beta == 0

    def position_weights(self) -> np.ndarray:
        return np.arange(1, self.n + 1, dtype=np.float64) ** -self.beta

    def probabilities(self) -> np.ndarray:
        """Exact target probabilities indexed by vertex id."""
        if self.is_uniform:
            return np.full(self.n, 1.0 / self.n)
        w = self.position_weights()
        p = np.empty(self.n)
        p[self.ranking] = w / w.sum()
        return p

    @cached_property
    def alias_table(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(prob, alias, labels) arrays consumed by the compiled samplers."""
        if self.is_uniform:
            return np.ones(self.n), np.arange(self.n), np.arange(self.n)
        prob, alias = _kernels.build_alias(self.position_weights())
        return prob, alias, self.ranking

    def sample(self, rng: np.random.Generator, size=None):
        prob, alias, labels = self.alias_table
        i = rng.integers(0, self.n, size=size)
        if not self.is_uniform:
            coin = rng.random(size=size)
            i = np.where(coin < prob[i], i, alias[i])
        out = labels[i]
        return int(out) if size is None else out


def sample_target(dist: PopularityDist, rng: np.random.Generator) -> int:
    return dist.sample(rng)


# -- augmentation strategies ------------------------------------------------------


def _check(g: BaseGraph, out_degree: int) -> None:
    if g.n < 2:
        raise AugmentError("augmentation needs at least 2 vertices")
    if out_degree < 1:
        raise AugmentError("out_degree must be >= 1")


def augment_distance(g: BaseGraph, alpha: float = 2.0, out_degree: int = 1, seed=None) -> ShortcutTable:
    """Shortcuts with P(x -> y) proportional to d(x, y)^-alpha over y != x.

    Uses the graph's own metric (Euclidean for continuum graphs, L1 on
    lattices). Cost is O(n) per source, O(n^2) overall.
    """
    _check(g, out_degree)
    if not alpha >= 0:
        raise AugmentError("alpha must be >= 0")
    rng = np.random.default_rng(seed)
    u = rng.random((g.n, out_degree))
    out, x, y = _kernels.distance_targets(g.coords, g.metric, g.extent, g.wrap, float(alpha), u)
    if x >= 0:
        raise AugmentError(f"vertices {x} and {y} are at distance 0")
    return ShortcutTable(out)


def harmonic_cdf(m: int) -> np.ndarray:
    """Cumulative P(rank <= r) for P(r) = 1 / (H_m r), r = 1..m."""
    c = np.cumsum(1.0 / np.arange(1, m + 1))
    return c / c[-1]


def augment_rank(g: BaseGraph, out_degree: int = 1, seed=None) -> ShortcutTable:
    """Shortcuts with P(x -> y) = 1 / (H_{n-1} rank_x(y)).

    The rank law is the same for every source, so ranks are drawn first and
    each one is resolved to a vertex by selection in x's distance order.
    """
    _check(g, out_degree)
    rng = np.random.default_rng(seed)
    u = rng.random((g.n, out_degree))
    cdf = harmonic_cdf(g.n - 1)
    ranks = np.minimum(np.searchsorted(cdf, u, side="right"), g.n - 2) + 1
    return ShortcutTable(_kernels.rank_targets(g.coords, g.metric, g.extent, g.wrap, ranks))


def augment_uniform(g: BaseGraph, out_degree: int = 1, seed=None) -> ShortcutTable:
    _check(g, out_degree)
    rng = np.random.default_rng(seed)
    t = rng.integers(0, g.n - 1, size=(g.n, out_degree))
    t += t >= np.arange(g.n)[:, None]
    return ShortcutTable(t)


def rank_of(g: BaseGraph, x: int, y: int) -> int:
    """1-based position of y among V minus x ordered by (distance from x, id)."""
    if x == y:
        raise AugmentError("rank_of is undefined for x == y")
    keys = g.distance_keys_from(x)
    ky = keys[y]
    ids = np.arange(g.n)
    closer = (keys < ky) | ((keys == ky) & (ids < y))
    closer[x] = False
    return int(closer.sum()) + 1

