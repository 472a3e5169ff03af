"""Population density models on the unit square and Poisson point sampling.

A model is reduced to a list of axis-aligned zones with normalised
weights; points are placed by drawing an independent Poisson count for
each zone (mean ``target_n * weight``) and scattering that many points
uniformly inside it. The metropolis model is the exception: its core is
a disc, so its points are drawn by rejection against the exact disc and
the rectangular zones are only a discretised description of it.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import IO, Union

import numpy as np

UNIT_SQUARE = (0.0, 0.0, 1.0, 1.0)

# metropolis core: 90% of the mass within 20% of the centre-to-corner distance
METRO_CENTER = (0.5, 0.5)
METRO_RADIUS = 0.2 * math.sqrt(2.0) / 2.0
METRO_CORE_MASS = 0.9
METRO_GRID = 128


class PopulationError(ValueError):
    pass


class RasterFormatError(PopulationError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True, eq=False)
class RasterGrid:
    """Relative densities on an ncols x nrows grid; row 0 is the top of the map."""

    ncols: int
    nrows: int
    cells: np.ndarray

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=np.float64).ravel()
        if self.ncols < 1 or self.nrows < 1:
            raise PopulationError("raster dimensions must be positive")
        if cells.size != self.ncols * self.nrows:
            raise PopulationError(f"expected {self.ncols * self.nrows} cells, got {cells.size}")
        if not np.all(np.isfinite(cells)) or np.any(cells < 0):
            raise PopulationError("raster cells must be finite and nonnegative")
        if not np.any(cells > 0):
            raise PopulationError("raster has no positive cell")
        object.__setattr__(self, "cells", cells)

    def as_array(self) -> np.ndarray:
        return self.cells.reshape(self.nrows, self.ncols)

    def cell_rect(self, row: int, col: int) -> tuple[float, float, float, float]:
        return (col / self.ncols, 1.0 - (row + 1) / self.nrows,
                (col + 1) / self.ncols, 1.0 - row / self.nrows)


@dataclass(frozen=True)
class Uniform:
    name = "uniform"


@dataclass(frozen=True)
class Metropolis:
    name = "metropolis"


@dataclass(frozen=True)
class RandomZones:
    """k x k zones with randomly permuted labels s = 1..k^2 and density 1/s^gamma.

    ``labels`` may be given explicitly (row-major from the bottom-left zone);
    otherwise they are a random permutation drawn from ``seed``.
    """

    k: int = 100
    gamma: float = 1.2
    seed: int = 0
    labels: tuple[int, ...] | None = field(default=None, compare=False)
    name = "random-zones"

    def __post_init__(self):
        if self.k < 1:
            raise PopulationError("k must be >= 1")
        if not self.gamma >= 0:
            raise PopulationError("gamma must be >= 0")
        if self.labels is not None:
            lab = tuple(int(s) for s in self.labels)
            if sorted(lab) != list(range(1, self.k * self.k + 1)):
                raise PopulationError("labels must be a permutation of 1..k^2")
            object.__setattr__(self, "labels", lab)

    def zone_labels(self) -> np.ndarray:
        if self.labels is not None:
            return np.asarray(self.labels, dtype=np.int64)
        return np.random.default_rng(self.seed).permutation(self.k * self.k) + 1


@dataclass(frozen=True, eq=False)
class Raster:
    grid: RasterGrid
    name = "raster"


DensityModel = Union[Uniform, Metropolis, RandomZones, Raster]


@dataclass(frozen=True, eq=False)
class Zones:
    """Rectangles ``(x0, y0, x1, y1)`` partitioning the unit square, with weights summing to 1."""

    rects: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return len(self.weights)

    def __iter__(self):
        for r, w in zip(self.rects, self.weights):
            yield tuple(r), float(w)


def _grid_rects(ncols: int, nrows: int) -> np.ndarray:
    """Cells of a regular grid, bottom row first, left to right."""
    xs = np.arange(ncols, dtype=np.float64)
    ys = np.arange(nrows, dtype=np.float64)
    gx, gy = np.meshgrid(xs, ys)
    gx, gy = gx.ravel(), gy.ravel()
    return np.column_stack([gx / ncols, gy / nrows, (gx + 1) / ncols, (gy + 1) / nrows])


def _normalised(w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    return w / math.fsum(w)


def _disc_cell_fraction(rects: np.ndarray, sub: int = 16) -> np.ndarray:
    """Fraction of each rectangle inside the metropolis disc (midpoint rule)."""
    t = (np.arange(sub) + 0.5) / sub
    fx = rects[:, [0]] + (rects[:, [2]] - rects[:, [0]]) * t
    fy = rects[:, [1]] + (rects[:, [3]] - rects[:, [1]]) * t
    dx2 = (fx - METRO_CENTER[0]) ** 2
    dy2 = (fy - METRO_CENTER[1]) ** 2
    inside = (dx2[:, :, None] + dy2[:, None, :]) <= METRO_RADIUS ** 2
    return inside.mean(axis=(1, 2))


def zone_weights(model: DensityModel) -> Zones:
    if isinstance(model, Uniform):
        return Zones(np.array([UNIT_SQUARE]), np.array([1.0]))
    if isinstance(model, RandomZones):
        rects = _grid_rects(model.k, model.k)
        return Zones(rects, _normalised(model.zone_labels().astype(np.float64) ** -model.gamma))
    if isinstance(model, Raster):
        g = model.grid
        # grid rows are top-first; zone rects are bottom-first
        cells = g.as_array()[::-1].ravel()
        return Zones(_grid_rects(g.ncols, g.nrows), _normalised(cells))
    if isinstance(model, Metropolis):
        rects = _grid_rects(METRO_GRID, METRO_GRID)
        area = (rects[:, 2] - rects[:, 0]) * (rects[:, 3] - rects[:, 1])
        frac = _disc_cell_fraction(rects)
        disc_area = math.pi * METRO_RADIUS ** 2
        w = area * (METRO_CORE_MASS * frac / disc_area
                    + (1 - METRO_CORE_MASS) * (1 - frac) / (1 - disc_area))
        return Zones(rects, _normalised(w))
    raise TypeError(f"unknown density model {model!r}")


# -- sampling ------------------------------------------------------------------


def _uniform_in(rects: np.ndarray, counts: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    idx = np.repeat(np.arange(len(counts)), counts)
    r = rects[idx]
    u = rng.random((len(idx), 2))
    return np.column_stack([r[:, 0] + u[:, 0] * (r[:, 2] - r[:, 0]),
                            r[:, 1] + u[:, 1] * (r[:, 3] - r[:, 1])])


def _metropolis_points(counts, rng) -> np.ndarray:
    core, rest = int(counts[0]), int(counts[1])
    cx, cy = METRO_CENTER
    r2 = METRO_RADIUS ** 2
    out = []
    need = core
    while need:
        box = rng.random((2 * need + 8, 2)) * (2 * METRO_RADIUS) + (cx - METRO_RADIUS, cy - METRO_RADIUS)
        ok = box[((box[:, 0] - cx) ** 2 + (box[:, 1] - cy) ** 2) < r2][:need]
        out.append(ok)
        need -= len(ok)
    need = rest
    while need:
        box = rng.random((need + 8, 2))
        ok = box[((box[:, 0] - cx) ** 2 + (box[:, 1] - cy) ** 2) >= r2][:need]
        out.append(ok)
        need -= len(ok)
    return np.concatenate(out) if out else np.empty((0, 2))


def sample_points(model: DensityModel, target_n: int, seed=None, *, cap_factor: float = 4.0) -> np.ndarray:
    """Positions of a non-homogeneous Poisson process with expected size ``target_n``.

    Returns an (m, 2) array of distinct points in [0, 1)^2. A realisation
    with zero points is discarded and redrawn from the same generator.
    """
    if target_n < 1:
        raise PopulationError("target_n must be >= 1")
    rng = np.random.default_rng(seed)
    cap = cap_factor * target_n
    metro = isinstance(model, Metropolis)
    if metro:
        rects = None
        weights = np.array([METRO_CORE_MASS, 1 - METRO_CORE_MASS])
    else:
        zones = zone_weights(model)
        rects, weights = zones.rects, zones.weights

    while True:
        counts = rng.poisson(target_n * weights)
        total = int(counts.sum())
        if total > 0:
            break
    if total > cap:
        raise PopulationError(f"realised {total} points exceeds cap {cap:g}")

    zone_of = np.repeat(np.arange(len(counts)), counts)
    pts = _metropolis_points(counts, rng) if metro else _uniform_in(rects, counts, rng)

    # redraw coincident points inside their own zone
    while True:
        _, first = np.unique(pts, axis=0, return_index=True)
        if len(first) == len(pts):
            break
        dup = np.setdiff1d(np.arange(len(pts)), first)
        if metro:
            for i in dup:
                c = np.zeros(2, np.int64)
                c[zone_of[i]] = 1
                pts[i] = _metropolis_points(c, rng)[0]
        else:
            pts[dup] = _uniform_in(rects[zone_of[dup]], np.ones(len(dup), np.int64), rng)
    return pts


# -- raster files ----------------------------------------------------------------

_IGNORED_KEYS = {"xllcorner", "yllcorner", "xllcenter", "yllcenter", "cellsize"}


def load_raster(source: Union[str, bytes, IO]) -> RasterGrid:
    """Parse a plain-text density grid.

    The header is ``ncols <int>`` and ``nrows <int>``; the usual ASCII grid
    keys (``xllcorner``, ``cellsize``, ...) are accepted and ignored, and
    cells equal to ``NODATA_value`` count as zero. Lines starting with
    ``#`` are comments. Rows run from the top of the map downwards.
    """
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, str):
        text = source
    else:
        text = source.read()
        if isinstance(text, bytes):
            text = text.decode("utf-8")

    header: dict[str, float] = {}
    values: list[float] = []
    rows_seen = 0
    ncols = nrows = None
    nodata = None
    for lineno, raw in enumerate(io.StringIO(text), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        key = parts[0].lower()
        if ncols is None or nrows is None or (key in _IGNORED_KEYS or key == "nodata_value"):
            if rows_seen:
                raise RasterFormatError(f"header key {parts[0]!r} after data", lineno)
            if len(parts) != 2 or not key.isidentifier():
                raise RasterFormatError(f"malformed header line {line!r}", lineno)
            if key in ("ncols", "nrows"):
                try:
                    v = int(parts[1])
                except ValueError:
                    raise RasterFormatError(f"{key} must be an integer", lineno) from None
                if v < 1:
                    raise RasterFormatError(f"{key} must be positive", lineno)
                if key in header:
                    raise RasterFormatError(f"duplicate {key}", lineno)
                header[key] = v
                ncols, nrows = header.get("ncols"), header.get("nrows")
            elif key == "nodata_value":
                try:
                    nodata = float(parts[1])
                except ValueError:
                    raise RasterFormatError("NODATA_value must be numeric", lineno) from None
            elif key not in _IGNORED_KEYS:
                raise RasterFormatError(f"unknown header key {parts[0]!r}", lineno)
            continue
        if len(parts) != ncols:
            raise RasterFormatError(f"expected {ncols} values, found {len(parts)}", lineno)
        row = []
        for tok in parts:
            try:
                v = float(tok)
            except ValueError:
                raise RasterFormatError(f"non-numeric cell {tok!r}", lineno) from None
            if nodata is not None and v == nodata:
                v = 0.0
            if not math.isfinite(v) or v < 0:
                raise RasterFormatError(f"cell {tok!r} is not a nonnegative number", lineno)
            row.append(v)
        values.extend(row)
        rows_seen += 1
        if rows_seen > nrows:
            raise RasterFormatError(f"more than nrows={nrows} data rows", lineno)
        last_line = lineno
    if ncols is None or nrows is None:
        raise RasterFormatError("missing ncols/nrows header")
    if rows_seen != nrows:
        raise RasterFormatError(f"expected {nrows} data rows, found {rows_seen}")
    if not any(v > 0 for v in values):
        raise RasterFormatError("grid has no positive cell", last_line)
    return RasterGrid(ncols, nrows, np.array(values))


def dump_raster(grid: RasterGrid, fp: IO[str]) -> None:
    fp.write(f"ncols {grid.ncols}\nnrows {grid.nrows}\n")
    for row in grid.as_array():
        fp.write(" ".join(repr(float(v)) if v != int(v) else str(int(v)) for v in row) + "\n")


def country_grid(seed: int = 2011, ncols: int = 60, nrows: int = 140) -> RasterGrid:
    """Synthetic stand-in for a national 1 km population raster.

    An elongated, wiggling country outline (mostly empty cells outside),
    sparse rural settlement, and a handful of cities with Zipf-distributed
    sizes concentrated towards the south. Values are quantised to the
    representative levels of banded census maps.
    """
    rng = np.random.default_rng(seed)
    v = (np.arange(nrows) + 0.5) / nrows  # 0 = top (north)
    u = (np.arange(ncols) + 0.5) / ncols
    uu, vv = np.meshgrid(u, v)
    centre = 0.55 - 0.15 * vv + 0.06 * np.sin(7.0 * vv)
    half_width = 0.12 + 0.22 * vv * (1.2 - vv)
    land = np.abs(uu - centre) < half_width

    dens = np.where(land & (rng.random(land.shape) < 0.45), rng.exponential(2.0, land.shape), 0.0)
    n_cities = 40
    sizes = 4000.0 * np.arange(1, n_cities + 1) ** -1.1
    ys = np.clip(rng.beta(4.0, 1.6, n_cities), 0.02, 0.98)
    for size, cy in zip(sizes, ys):
        row = int(cy * nrows)
        cols = np.nonzero(land[row])[0]
        cx = (rng.choice(cols) + 0.5) / ncols
        spread = 0.004 + 0.0006 * math.sqrt(size)
        # measure both axes in units of the grid width so cities are round
        r2 = (uu - cx) ** 2 + ((vv - cy) * nrows / ncols) ** 2
        dens += size * np.exp(-r2 / (2 * spread ** 2)) * land

    levels = np.array([0.0, 2.5, 17.0, 90.0, 2500.0, 7500.0])
    edges = np.array([1.0, 5.0, 30.0, 150.0, 5000.0])
    quantised = levels[np.searchsorted(edges, dens, side="right")]
    return RasterGrid(ncols, nrows, quantised.ravel())
