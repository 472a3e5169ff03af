"""Destination sampling: shortcuts learn from the destinations of searches.

Every step draws a source y and destination z, walks greedily from y to
z under the current shortcuts, and then each vertex on the walk other
than z independently, with probability p, points one of its shortcut
slots at z.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _kernels
from .augment import PopularityDist, ShortcutTable
from .basegraph import BaseGraph

log = logging.getLogger(__name__)

TRACE_POINTS = 1000


class RewireAborted(RuntimeError):
    pass


@dataclass
class RewireConfig:
    p: float = 0.1
    iteration_factor: float = 10.0
    source_dist: PopularityDist | None = None
    target_dist: PopularityDist | None = None
    rng_seed: int | None = 0
    step_cap: int | None = None
    out_degree: int = 1
    abort_fraction: float = 0.01

    def __post_init__(self):
        if not 0 < self.p < 1:
            raise ValueError("p must lie in (0, 1)")
        if not self.iteration_factor >= 0:
            raise ValueError("iteration_factor must be >= 0")
        if self.out_degree < 1:
            raise ValueError("out_degree must be >= 1")

    def iterations(self, n: int) -> int:
        return int(round(self.iteration_factor * n))


@dataclass
class RewireReport:
    iterations_run: int = 0
    replacements_made: int = 0
    truncated_walks: int = 0
    dead_ends: int = 0
    total_walk_length: int = 0
    walk_length_trace: np.ndarray = field(default_factory=lambda: np.empty(0))
    head_median: float = float("nan")
    tail_median: float = float("nan")


@dataclass(frozen=True)
class StepRecord:
    walk: tuple[int, ...]
    replacements: int


def init_self_loops(g: BaseGraph, out_degree: int = 1) -> ShortcutTable:
    return ShortcutTable(np.repeat(np.arange(g.n, dtype=np.int64)[:, None], out_degree, axis=1))


def _sampler(dist: PopularityDist | None, n: int):
    dist = PopularityDist.uniform(n) if dist is None else dist
    if dist.n != n:
        raise ValueError(f"popularity law is over {dist.n} vertices, graph has {n}")
    prob, alias, labels = dist.alias_table
    return prob, alias, labels, dist.is_uniform


class _Stepper:
    def __init__(self, g: BaseGraph, table: ShortcutTable, cfg: RewireConfig):
        if table.n != g.n:
            raise ValueError("table and graph sizes differ")
        self.g, self.table, self.cfg = g, table, cfg
        self.cap = g.n if cfg.step_cap is None else int(cfg.step_cap)
        self.src = _sampler(cfg.source_dist, g.n)
        self.tgt = _sampler(cfg.target_dist, g.n)
        self.path = np.empty(self.cap + 1, dtype=np.int64)
        self.counters = np.zeros(3, dtype=np.int64)

    def run(self, nsteps: int, rng, walk_lengths, offset: int) -> int:
        g = self.g
        return _kernels.ds_steps(
            g.indptr, g.indices, self.table.targets, g.coords, g.metric, g.extent, g.wrap,
            float(self.cfg.p), *self.src, *self.tgt,
            nsteps, self.cap, rng, walk_lengths, offset, self.counters, self.path)


def destination_sampling_step(g: BaseGraph, table: ShortcutTable, cfg: RewireConfig,
                              rng: np.random.Generator) -> StepRecord:
    """One rewiring step; mutates ``table`` and returns the walk and replacement count.

    An empty walk means the drawn source and destination coincided.
    """
    stepper = _Stepper(g, table, cfg)
    lengths = np.empty(1, dtype=np.int64)
    stepper.run(1, rng, lengths, 0)
    if lengths[0] < 0:
        return StepRecord((), 0)
    walk = tuple(int(v) for v in stepper.path[:lengths[0] + 1])
    return StepRecord(walk, int(stepper.counters[0]))


def _downsample(lengths: np.ndarray, points: int = TRACE_POINTS) -> np.ndarray:
    if len(lengths) == 0:
        return np.empty(0)
    blocks = np.array_split(lengths, min(points, len(lengths)))
    return np.array([b.mean() for b in blocks])


def run_destination_sampling(
    g: BaseGraph,
    cfg: RewireConfig,
    *,
    snapshot_every: int | None = None,
    on_snapshot: Callable[[int, ShortcutTable], None] | None = None,
) -> tuple[ShortcutTable, RewireReport]:
    """Run the rewiring dynamic from all-self-loop shortcuts.

    Deterministic given ``cfg.rng_seed``. ``on_snapshot(iteration, table)``
    is called every ``snapshot_every`` iterations with a copy of the table.
    """
    table = init_self_loops(g, cfg.out_degree)
    total = cfg.iterations(g.n)
    rng = np.random.default_rng(cfg.rng_seed)
    stepper = _Stepper(g, table, cfg)
    lengths = np.empty(total, dtype=np.int64)
    limit = cfg.abort_fraction * total
    chunk = snapshot_every if snapshot_every else max(total // 20, 1)

    done = 0
    while done < total:
        k = min(chunk, total - done)
        stepper.run(k, rng, lengths, done)
        done += k
        if stepper.counters[1] > limit:
            raise RewireAborted(
                f"{stepper.counters[1]} truncated walks after {done} of {total} iterations"
                f" (limit {limit:g}); the base graph is not greedy-routable")
        if snapshot_every and on_snapshot is not None and done % snapshot_every == 0:
            on_snapshot(done, table.copy())

    walked = lengths[lengths >= 0]
    report = RewireReport(
        iterations_run=total,
        replacements_made=int(stepper.counters[0]),
        truncated_walks=int(stepper.counters[1]),
        dead_ends=int(stepper.counters[2]),
        total_walk_length=int(walked.sum()),
        walk_length_trace=_downsample(walked),
    )
    if len(walked) >= 10:
        tenth = len(walked) // 10
        report.head_median = float(np.median(walked[:tenth]))
        report.tail_median = float(np.median(walked[-tenth:]))
    log.debug("destination sampling: %d iterations, %d replacements",
              total, report.replacements_made)
    return table, report
