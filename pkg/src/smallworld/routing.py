"""Greedy decentralised routing over a base graph plus shortcuts."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .augment import ShortcutTable
from .basegraph import BaseGraph


class Outcome(enum.IntEnum):
    ARRIVED = _kernels.ARRIVED
    DEAD_END = _kernels.DEAD_END
    STEP_CAP_EXCEEDED = _kernels.STEP_CAP


@dataclass(frozen=True)
class Route:
    path: tuple[int, ...]
    outcome: Outcome

    @property
    def hops(self) -> int:
        return len(self.path) - 1


def _table(g: BaseGraph, shortcuts: ShortcutTable | None) -> np.ndarray:
    if shortcuts is None:
        # self-loops are ignored by the walker
        return np.arange(g.n, dtype=np.int64)[:, None]
    if shortcuts.n != g.n:
        raise ValueError(f"shortcut table has {shortcuts.n} rows, graph has {g.n} vertices")
    return shortcuts.targets


def greedy_route(g: BaseGraph, shortcuts: ShortcutTable | None, source: int, target: int,
                 step_cap: int | None = None) -> Route:
    """Walk towards ``target`` always taking the closest candidate.

    Candidates are the base neighbours and shortcut targets of the current
    vertex; ties go to the smaller id. The walk stops with DEAD_END if the
    best candidate is not strictly closer than the current vertex.
    """
    cap = g.n if step_cap is None else int(step_cap)
    if cap < 1:
        raise ValueError("step_cap must be >= 1")
    if not (0 <= source < g.n and 0 <= target < g.n):
        raise IndexError("vertex id out of range")
    path = np.empty(cap + 1, dtype=np.int64)
    hops, outcome = _kernels.greedy_walk(g.indptr, g.indices, _table(g, shortcuts), g.coords,
                                         g.metric, g.extent, g.wrap, source, target, cap, path)
    return Route(tuple(int(v) for v in path[:hops + 1]), Outcome(outcome))


def route_many(g: BaseGraph, shortcuts: ShortcutTable | None, sources, targets,
               step_cap: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Hop counts and outcome codes for a batch of queries."""
    cap = g.n if step_cap is None else int(step_cap)
    src = np.ascontiguousarray(sources, dtype=np.int64)
    dst = np.ascontiguousarray(targets, dtype=np.int64)
    if src.shape != dst.shape:
        raise ValueError("sources and targets differ in length")
    return _kernels.route_many(g.indptr, g.indices, _table(g, shortcuts), g.coords,
                               g.metric, g.extent, g.wrap, src, dst, cap)
