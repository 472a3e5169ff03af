"""Experiment harness: size sweeps, paired method comparisons, scaling fits.

A *cell* is one (size, replicate) pair. Every method in a cell shares the
same point set, base graph, popularity ranking and query list, so methods
differ only in their shortcut tables. Cell seeds are derived from the base
seed and the cell's (size, replicate) coordinates, never from execution
order, which makes the output independent of worker count.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import curve_fit

from . import __version__, population
from .augment import PopularityDist, ShortcutTable, augment_distance, augment_rank, augment_uniform
from .basegraph import BaseGraph, delaunay, lattice
from .rewire import RewireConfig, run_destination_sampling
from .routing import Outcome, route_many

log = logging.getLogger(__name__)

CSV_COLUMNS = ("model", "method", "alpha", "beta", "size_target", "size_realized", "replicate",
               "mean_hops", "median_hops", "stddev_hops", "stderr_hops", "success_rate", "seed")

MODEL_KINDS = ("uniform", "metropolis", "random-zones", "raster", "ring", "lattice")
METHOD_KINDS = ("distance", "rank", "uniform", "ds")


class ExperimentError(RuntimeError):
    pass


@dataclass(frozen=True)
class ModelSpec:
    """Where vertices live.

    Continuum kinds sample a Poisson population and take its Delaunay graph;
    ``ring`` is a cyclic 1-D lattice of exactly ``size`` vertices and
    ``lattice`` a square 2-D lattice with side ``round(sqrt(size))``.
    A raster comes from ``file`` or, with ``builtin="country"``, from the
    bundled synthetic country grid.
    """

    kind: str = "uniform"
    k: int = 100
    gamma: float = 1.2
    zone_seed: int = 0
    file: str | None = None
    sha256: str | None = None
    builtin: str | None = None
    cyclic: bool = True

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.kind == "raster" and not (self.file or self.builtin):
            raise ValueError("raster model needs a file or builtin grid")

    @property
    def is_lattice(self) -> bool:
        return self.kind in ("ring", "lattice")

    def density(self) -> population.DensityModel:
        if self.kind == "uniform":
            return population.Uniform()
        if self.kind == "metropolis":
            return population.Metropolis()
        if self.kind == "random-zones":
            return population.RandomZones(self.k, self.gamma, self.zone_seed)
        if self.kind == "raster":
            return population.Raster(self.raster_grid())
        raise ValueError(f"{self.kind} is not a density model")

    def raster_grid(self) -> population.RasterGrid:
        if self.builtin == "country":
            return population.country_grid()
        if self.builtin:
            raise ValueError(f"unknown builtin raster {self.builtin!r}")
        data = Path(self.file).read_bytes()
        digest = hashlib.sha256(data).hexdigest()
        if self.sha256 and self.sha256 != digest:
            raise ExperimentError(f"raster {self.file} changed since the manifest was written")
        return population.load_raster(data)

    def pinned(self) -> "ModelSpec":
        """Copy with the raster file hash recorded."""
        if self.kind == "raster" and self.file and not self.sha256:
            digest = hashlib.sha256(Path(self.file).read_bytes()).hexdigest()
            return ModelSpec(**{**asdict(self), "sha256": digest})
        return self

    def to_dict(self) -> dict:
        keys = {"random-zones": ("k", "gamma", "zone_seed"),
                "raster": ("file", "sha256", "builtin"),
                "lattice": ("cyclic",)}.get(self.kind, ())
        d = {"kind": self.kind}
        d.update({k: getattr(self, k) for k in keys if getattr(self, k) is not None})
        return d

    def label(self) -> str:
        if self.kind == "random-zones":
            return f"random-zones(k={self.k},gamma={self.gamma:g})"
        if self.kind == "raster":
            return f"raster({self.builtin or Path(self.file).name})"
        if self.kind == "lattice":
            return "lattice" if self.cyclic else "lattice(open)"
        return self.kind


@dataclass(frozen=True)
class MethodSpec:
    kind: str
    alpha: float | None = None
    p: float = 0.1
    factor: float = 10.0

    def __post_init__(self):
        if self.kind not in METHOD_KINDS:
            raise ValueError(f"unknown method {self.kind!r}")
        if self.kind == "distance":
            object.__setattr__(self, "alpha", 2.0 if self.alpha is None else float(self.alpha))
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "factor", float(self.factor))

    def label(self) -> str:
        if self.kind == "distance":
            return f"distance({self.alpha:g})"
        if self.kind == "ds":
            return "ds" if (self.p, self.factor) == (0.1, 10.0) else f"ds(p={self.p:g},factor={self.factor:g})"
        return self.kind

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "distance":
            d["alpha"] = self.alpha
        if self.kind == "ds":
            d.update(p=self.p, factor=self.factor)
        return d


@dataclass(frozen=True)
class ExperimentSpec:
    model: ModelSpec = field(default_factory=ModelSpec)
    sizes: tuple[int, ...] = (1000,)
    methods: tuple[MethodSpec, ...] = (MethodSpec("ds"),)
    queries_per_size: int = 10_000
    popularity_beta: float = 0.0
    replicates: int = 5
    base_seed: int = 0
    out_degree: int = 1

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        if not sizes or any(b <= a for a, b in zip(sizes, sizes[1:])) or sizes[0] < 2:
            raise ValueError("sizes must be nonempty, >= 2 and strictly increasing")
        if self.queries_per_size < 1 or self.replicates < 1 or self.out_degree < 1:
            raise ValueError("queries_per_size, replicates and out_degree must be >= 1")
        if not self.popularity_beta >= 0:
            raise ValueError("popularity_beta must be >= 0")
        if not self.methods:
            raise ValueError("at least one method is required")
        labels = [m.label() for m in self.methods]
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate methods")
        object.__setattr__(self, "sizes", sizes)

    def to_dict(self) -> dict:
        model = self.model.to_dict()
        return {
            "model": model,
            "sizes": list(self.sizes),
            "methods": [m.to_dict() for m in self.methods],
            "queries_per_size": self.queries_per_size,
            "popularity_beta": self.popularity_beta,
            "replicates": self.replicates,
            "base_seed": self.base_seed,
            "out_degree": self.out_degree,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        if "spec" in d:  # a run manifest
            d = d["spec"]
        model = d.get("model", {"kind": "uniform"})
        if isinstance(model, str):
            model = {"kind": model}
        methods = []
        for m in d.get("methods", [{"kind": "ds"}]):
            methods.append(MethodSpec(m) if isinstance(m, str) else MethodSpec(**m))
        return cls(
            model=ModelSpec(**model),
            sizes=tuple(d["sizes"]),
            methods=tuple(methods),
            queries_per_size=int(d.get("queries_per_size", 10_000)),
            popularity_beta=float(d.get("popularity_beta", 0.0)),
            replicates=int(d.get("replicates", 5)),
            base_seed=int(d.get("base_seed", 0)),
            out_degree=int(d.get("out_degree", 1)),
        )

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


@dataclass
class CellRecord:
    model: str
    method: str
    alpha: float | None
    beta: float
    size_target: int
    size_realized: int
    replicate: int
    mean_hops: float
    median_hops: float
    stddev_hops: float
    stderr_hops: float
    success_rate: float
    seed: int

    def interval(self, z: float = 1.96) -> tuple[float, float]:
        return self.mean_hops - z * self.stderr_hops, self.mean_hops + z * self.stderr_hops


@dataclass
class ScalingFit:
    """Two views of how mean hops grow with n.

    ``c``/``log2_residual``: least squares of hops = c (ln n)^2 through the
    origin, RMS residual in hops. ``slope``/``intercept``/``loglog_residual``:
    ordinary least squares of ln hops on ln n, RMS residual in log units.
    ``power_a``/``power_b``/``power_residual``: best hops = a n^b in the
    same linear least-squares sense as the (ln n)^2 fit.
    """

    c: float
    log2_residual: float
    slope: float
    intercept: float
    loglog_residual: float
    power_a: float
    power_b: float
    power_residual: float


@dataclass
class RunResult:
    spec: ExperimentSpec
    records: list[CellRecord]
    tables: dict[tuple[int, str, int], ShortcutTable] = field(default_factory=dict)
    hops: dict[tuple[int, str, int], np.ndarray] = field(default_factory=dict)

    def select(self, method: str, size: int | None = None) -> list[CellRecord]:
        return [r for r in self.records
                if r.method == method and (size is None or r.size_target == size)]

    def summary(self, method: str, size: int) -> tuple[float, float]:
        """Mean hops over replicates and its standard error."""
        recs = self.select(method, size)
        if not recs:
            raise KeyError((method, size))
        mean = float(np.mean([r.mean_hops for r in recs]))
        se = math.sqrt(sum(r.stderr_hops ** 2 for r in recs)) / len(recs)
        return mean, se

    def interval(self, method: str, size: int, z: float = 1.96) -> tuple[float, float]:
        mean, se = self.summary(method, size)
        return mean - z * se, mean + z * se

    def fits(self) -> dict[str, ScalingFit]:
        return fit_scaling(self)

    def to_csv(self) -> str:
        return records_to_csv(self.records, self.spec)


# -- cell execution ------------------------------------------------------------


def cell_seed(base_seed: int, size: int, replicate: int) -> int:
    ss = np.random.SeedSequence(base_seed, spawn_key=(size, replicate))
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


def method_seed(cell: int, method: MethodSpec) -> np.random.SeedSequence:
    return np.random.SeedSequence(cell, spawn_key=(zlib.crc32(method.label().encode()),))


def build_instance(model: ModelSpec, size: int, seed) -> BaseGraph:
    if model.kind == "ring":
        return lattice([size], cyclic=True)
    if model.kind == "lattice":
        side = max(2, int(round(math.sqrt(size))))
        return lattice([side, side], cyclic=model.cyclic)
    density = model.density()
    rng = np.random.default_rng(seed)
    while True:
        pts = population.sample_points(density, size, rng)
        # a one-vertex world has nothing to route
        if len(pts) >= 2:
            return delaunay(pts)


def draw_queries(n: int, popularity: PopularityDist, count: int, rng: np.random.Generator):
    """Uniform sources and popularity-law targets, with distinct endpoints."""
    targets = popularity.sample(rng, count)
    sources = rng.integers(0, n, count)
    clash = sources == targets
    while clash.any():
        sources[clash] = rng.integers(0, n, int(clash.sum()))
        clash = sources == targets
    return sources, targets


def build_shortcuts(g: BaseGraph, method: MethodSpec, popularity: PopularityDist,
                    out_degree: int, seed) -> ShortcutTable:
    if method.kind == "distance":
        return augment_distance(g, method.alpha, out_degree, seed)
    if method.kind == "rank":
        return augment_rank(g, out_degree, seed)
    if method.kind == "uniform":
        return augment_uniform(g, out_degree, seed)
    cfg = RewireConfig(p=method.p, iteration_factor=method.factor, target_dist=popularity,
                       rng_seed=seed, out_degree=out_degree)
    table, report = run_destination_sampling(g, cfg)
    return table


def run_cell(spec: ExperimentSpec, size: int, replicate: int, keep: bool = False):
    seed = cell_seed(spec.base_seed, size, replicate)
    s_points, s_pop, s_queries = np.random.SeedSequence(seed).spawn(3)
    provenance = f"model={spec.model.label()} size={size} replicate={replicate} seed={seed}"
    try:
        g = build_instance(spec.model, size, s_points)
    except Exception as exc:
        raise ExperimentError(f"building instance failed ({provenance}): {exc}") from exc
    n = g.n
    if spec.popularity_beta == 0:
        popularity = PopularityDist.uniform(n)
    else:
        popularity = PopularityDist.power_law(n, spec.popularity_beta, s_pop)
    sources, targets = draw_queries(n, popularity, spec.queries_per_size, np.random.default_rng(s_queries))

    records, tables, hops_out = [], {}, {}
    for method in spec.methods:
        label = method.label()
        try:
            table = build_shortcuts(g, method, popularity, spec.out_degree, method_seed(seed, method))
        except Exception as exc:
            raise ExperimentError(f"{label} failed ({provenance}): {exc}") from exc
        hops, outcomes = route_many(g, table, sources, targets)
        ok = outcomes == Outcome.ARRIVED
        if not ok.all():
            # Delaunay graphs and lattices always admit a closer neighbour
            raise ExperimentError(
                f"{int((~ok).sum())} greedy routes failed under {label} ({provenance})")
        h = hops.astype(np.float64)
        sd = float(h.std(ddof=1)) if len(h) > 1 else 0.0
        records.append(CellRecord(
            model=spec.model.label(), method=label, alpha=method.alpha, beta=spec.popularity_beta,
            size_target=size, size_realized=n, replicate=replicate,
            mean_hops=float(h.mean()), median_hops=float(np.median(h)), stddev_hops=sd,
            stderr_hops=sd / math.sqrt(len(h)), success_rate=float(ok.mean()), seed=seed))
        if keep:
            tables[(size, label, replicate)] = table
            hops_out[(size, label, replicate)] = hops
    return records, tables, hops_out


def _run_cell_args(args):
    return run_cell(*args)


def run_scaling(spec: ExperimentSpec, *, workers: int = 1, keep: bool = False) -> RunResult:
    """Run every (size, replicate) cell and collect per-method statistics."""
    jobs = [(spec, size, rep, keep) for size in spec.sizes for rep in range(spec.replicates)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(_run_cell_args, jobs))
    else:
        outputs = [_run_cell_args(j) for j in jobs]
    records, tables, hops = [], {}, {}
    for recs, tabs, hs in outputs:
        records.extend(recs)
        tables.update(tabs)
        hops.update(hs)
    order = {m.label(): i for i, m in enumerate(spec.methods)}
    records.sort(key=lambda r: (r.size_target, order[r.method], r.replicate))
    return RunResult(spec, records, tables, hops)


def run_combined(spec: ExperimentSpec, **kwargs) -> RunResult:
    """Density plus popularity: the same pipeline under a biased target law.

    Destination sampling is trained on the biased queries and every method
    is evaluated on them. With beta = 0 this is exactly :func:`run_scaling`.
    """
    if spec.model.is_lattice:
        raise ValueError("the combined experiment needs a density model")
    return run_scaling(spec, **kwargs)


# -- analysis ----------------------------------------------------------------------


def fit_scaling(result: RunResult | dict) -> dict[str, ScalingFit]:
    """Fit each method's hop growth.

    Accepts a :class:`RunResult` (replicates are reduced to the median of
    their means, abscissa = mean realised n) or a mapping
    ``method -> (ns, mean_hops)`` of already-aggregated points.
    """
    if isinstance(result, RunResult):
        series = {}
        for method in dict.fromkeys(r.method for r in result.records):
            xs, ys = [], []
            for size in result.spec.sizes:
                recs = result.select(method, size)
                xs.append(float(np.mean([r.size_realized for r in recs])))
                ys.append(float(np.median([r.mean_hops for r in recs])))
            series[method] = (xs, ys)
    else:
        series = result
    return {m: _fit(np.asarray(x, float), np.asarray(y, float)) for m, (x, y) in series.items()}


def _fit(n: np.ndarray, hops: np.ndarray) -> ScalingFit:
    if len(n) < 3:
        raise ValueError("scaling fits need at least 3 sizes")
    if np.any(n <= 1) or np.any(hops <= 0):
        raise ValueError("scaling fits need n > 1 and positive hop counts")
    x = np.log(n) ** 2
    c = float(x @ hops / (x @ x))
    log2_res = float(np.sqrt(np.mean((hops - c * x) ** 2)))

    ln_n, ln_h = np.log(n), np.log(hops)
    slope, intercept = np.polyfit(ln_n, ln_h, 1)
    loglog_res = float(np.sqrt(np.mean((ln_h - (intercept + slope * ln_n)) ** 2)))

    a0, b0 = math.exp(intercept), slope
    try:
        (a, b), _ = curve_fit(lambda t, a, b: a * t ** b, n, hops, p0=(a0, b0), maxfev=20000)
    except RuntimeError:
        a, b = a0, b0
    power_res = float(np.sqrt(np.mean((hops - a * n ** b) ** 2)))
    return ScalingFit(c, log2_res, float(slope), float(intercept), loglog_res,
                      float(a), float(b), power_res)


@dataclass
class DegreeHistogram:
    """Fraction of vertices per in-degree bucket (bucket = degree rounded up to a multiple of ten, at least 10)."""

    buckets: dict[int, float]
    degrees: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0, np.int64))

    def ccdf(self) -> tuple[np.ndarray, np.ndarray]:
        """Bucket bounds b and the fraction of vertices in buckets >= b."""
        bounds = np.array(sorted(self.buckets))
        frac = np.array([self.buckets[b] for b in bounds])
        return bounds, frac[::-1].cumsum()[::-1]

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["bucket", "fraction"])
        for b in sorted(self.buckets):
            w.writerow([b, repr(self.buckets[b])])
        return out.getvalue()


def degree_bucket(deg) -> np.ndarray:
    return np.maximum(10, -(-np.asarray(deg) // 10) * 10)


def degree_histogram(table: ShortcutTable, base: BaseGraph | None = None) -> DegreeHistogram:
    """Histogram of shortcut in-degrees; base-graph edges are not counted."""
    if base is not None and base.n != table.n:
        raise ValueError("table and graph sizes differ")
    deg = table.in_degree()
    b, counts = np.unique(degree_bucket(deg), return_counts=True)
    return DegreeHistogram({int(k): float(c) / len(deg) for k, c in zip(b, counts)}, deg)


# -- output ------------------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def records_to_csv(records: list[CellRecord], spec: ExperimentSpec | None = None) -> str:
    out = io.StringIO()
    if spec is not None:
        out.write(f"# smallworld {__version__} experiment spec={spec.canonical_json()}\n")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
    return out.getvalue()


def manifest(result: RunResult) -> dict:
    spec = result.spec
    return {
        "tool": "smallworld",
        "version": __version__,
        "spec": spec.to_dict(),
        "cells": [{"size": s, "replicate": r, "seed": cell_seed(spec.base_seed, s, r)}
                  for s in spec.sizes for r in range(spec.replicates)],
        "csv_sha256": hashlib.sha256(result.to_csv().encode()).hexdigest(),
    }
