"""Short-range base graphs: Delaunay graphs of point sets and lattices.

The triangulation comes from Qhull (via :mod:`scipy.spatial`) and is then
certified edge by edge with exact in-circle tests. Any edge that fails the
empty-circle test, or that sits on a cocircular quadrilateral and is not
the canonical diagonal, is flipped (Lawson's algorithm). Cocircular ties
are resolved so the chosen diagonal is incident to the smallest vertex id
among the four corners, which makes the output a deterministic function
of the input coordinates.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import sqrt

import numpy as np
from scipy.spatial import Delaunay, QhullError

from . import _kernels
from ._predicates import incircle_exact, incircle_filter, orient2d, orient2d_exact, orient2d_filter


class GraphError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class BaseGraph:
    """Symmetric short-range graph plus the metric used for routing.

    ``coords`` holds Euclidean positions for continuum graphs and integer
    lattice coordinates for lattices. Adjacency is CSR: the neighbours of
    ``i`` are ``indices[indptr[i]:indptr[i + 1]]``, sorted ascending.
    """

    indptr: np.ndarray
    indices: np.ndarray
    coords: np.ndarray
    metric: int = _kernels.EUCLIDEAN
    dims: tuple[int, ...] = ()
    cyclic: tuple[bool, ...] = ()
    extent: np.ndarray = field(init=False, repr=False)
    wrap: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.metric == _kernels.LATTICE:
            extent = np.asarray(self.dims, dtype=np.float64)
            wrap = np.asarray(self.cyclic, dtype=np.bool_)
        else:
            extent = np.zeros(2)
            wrap = np.zeros(2, dtype=np.bool_)
        object.__setattr__(self, "extent", extent)
        object.__setattr__(self, "wrap", wrap)

    @property
    def n(self) -> int:
        return len(self.indptr) - 1

    @property
    def is_lattice(self) -> bool:
        return self.metric == _kernels.LATTICE

    @property
    def positions(self) -> np.ndarray:
        if self.is_lattice:
            raise AttributeError("lattice graphs have no continuum positions")
        return self.coords

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    def edges(self) -> np.ndarray:
        """(m, 2) array of undirected edges with i < j, lexicographically sorted."""
        src = np.repeat(np.arange(self.n), self.degree())
        keep = src < self.indices
        return np.column_stack([src[keep], self.indices[keep]])

    def distance_key(self, i: int, j: int) -> float:
        return _kernels.dist_key(self.coords, self.metric, self.extent, self.wrap, i, j)

    def distance(self, i: int, j: int) -> float:
        k = self.distance_key(i, j)
        return sqrt(k) if self.metric == _kernels.EUCLIDEAN else k

    def distance_keys_from(self, x: int) -> np.ndarray:
        """Comparison keys from ``x`` to every vertex (squared for Euclidean)."""
        diff = np.abs(self.coords - self.coords[x])
        if self.metric == _kernels.EUCLIDEAN:
            return diff[:, 0] * diff[:, 0] + diff[:, 1] * diff[:, 1]
        for k, (side, cyc) in enumerate(zip(self.dims, self.cyclic)):
            if cyc:
                diff[:, k] = np.minimum(diff[:, k], side - diff[:, k])
        return diff.sum(axis=1)

    def distances_from(self, x: int) -> np.ndarray:
        keys = self.distance_keys_from(x)
        return np.sqrt(keys) if self.metric == _kernels.EUCLIDEAN else keys


def _csr(n: int, edges: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    both = np.concatenate([edges, edges[:, ::-1]])
    both = np.unique(both, axis=0)
    if len(both) and np.any(both[:, 0] == both[:, 1]):
        raise GraphError("self-loop in base graph")
    counts = np.bincount(both[:, 0], minlength=n)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return indptr, np.ascontiguousarray(both[:, 1])


def from_edges(n: int, edges, coords, *, metric=_kernels.EUCLIDEAN, dims=(), cyclic=()) -> BaseGraph:
    indptr, indices = _csr(n, np.asarray(edges))
    return BaseGraph(indptr, indices, np.ascontiguousarray(coords, dtype=np.float64),
                     metric, tuple(dims), tuple(bool(c) for c in cyclic))


# -- Delaunay ----------------------------------------------------------------


def _all_collinear(pts: np.ndarray) -> bool:
    a = pts[0]
    far = np.argmax(np.abs(pts - a).sum(axis=1))
    b = pts[far]
    m = len(pts)
    det, bound = orient2d_filter(np.broadcast_to(a, (m, 2)), np.broadcast_to(b, (m, 2)), pts)
    if np.any(np.abs(det) > bound):
        return False
    return all(orient2d_exact(a, b, c) == 0 for c in pts)


def _prefers_flip(pts, a, b, c, d) -> bool:
    """Should edge ab, with opposite apexes c and d, become cd?"""
    if orient2d(pts[a], pts[b], pts[c]) < 0:
        a, b = b, a
    s = incircle_exact(pts[a], pts[b], pts[c], pts[d])
    if s > 0:
        return True
    if s < 0:
        return False
    return min(a, b, c, d) not in (a, b)


class _FlipMesh:
    """Minimal triangle store for the (rare) Lawson repair pass."""

    def __init__(self, simplices):
        self.tris: dict[int, tuple[int, int, int]] = {}
        self.by_edge: dict[tuple[int, int], set[int]] = {}
        self._next = 0
        for t in simplices:
            self.add(tuple(int(v) for v in t))

    @staticmethod
    def _key(u, v):
        return (u, v) if u < v else (v, u)

    def add(self, tri):
        tid = self._next
        self._next += 1
        self.tris[tid] = tri
        a, b, c = tri
        for e in ((a, b), (b, c), (a, c)):
            self.by_edge.setdefault(self._key(*e), set()).add(tid)

    def remove(self, tid):
        a, b, c = self.tris.pop(tid)
        for e in ((a, b), (b, c), (a, c)):
            k = self._key(*e)
            self.by_edge[k].discard(tid)
            if not self.by_edge[k]:
                del self.by_edge[k]

    def apexes(self, edge):
        tids = self.by_edge.get(edge, ())
        if len(tids) != 2:
            return None
        t1, t2 = tids
        c = [v for v in self.tris[t1] if v not in edge][0]
        d = [v for v in self.tris[t2] if v not in edge][0]
        return t1, t2, c, d


def _lawson_repair(pts, simplices, suspects) -> np.ndarray:
    mesh = _FlipMesh(simplices)
    stack = [tuple(e) for e in suspects]
    budget = 10 * len(simplices) + 1000
    while stack:
        edge = stack.pop()
        found = mesh.apexes(edge)
        if found is None:
            continue
        t1, t2, c, d = found
        a, b = edge
        if not _prefers_flip(pts, a, b, c, d):
            continue
        budget -= 1
        if budget < 0:
            raise GraphError("Delaunay repair did not converge")
        mesh.remove(t1)
        mesh.remove(t2)
        mesh.add((c, d, a))
        mesh.add((c, d, b))
        for u, v in ((a, c), (c, b), (b, d), (d, a)):
            stack.append(mesh._key(u, v))
    return np.array(list(mesh.tris.values()), dtype=np.int64)


def _triangle_edges(simplices: np.ndarray) -> np.ndarray:
    e = np.concatenate([simplices[:, [0, 1]], simplices[:, [1, 2]], simplices[:, [0, 2]]])
    e.sort(axis=1)
    return np.unique(e, axis=0)


def delaunay_triangles(points) -> np.ndarray:
    """Canonical Delaunay triangles (index triples) of at least 3 non-collinear points."""
    pts = np.ascontiguousarray(points, dtype=np.float64)
    tri = Delaunay(pts)
    simplices = tri.simplices.astype(np.int64)
    nbrs = tri.neighbors

    # interior edges: triangle t, local vertex k opposite the shared edge
    t_idx, k_idx = np.nonzero(nbrs > np.arange(len(simplices))[:, None])
    if len(t_idx) == 0:
        return simplices
    u = nbrs[t_idx, k_idx]
    c = simplices[t_idx, k_idx]
    a = simplices[t_idx, (k_idx + 1) % 3]
    b = simplices[t_idx, (k_idx + 2) % 3]
    back = np.argmax(nbrs[u] == t_idx[:, None], axis=1)
    d = simplices[u, back]

    sign = np.sign((pts[b, 0] - pts[a, 0]) * (pts[c, 1] - pts[a, 1])
                   - (pts[b, 1] - pts[a, 1]) * (pts[c, 0] - pts[a, 0]))
    det, bound = incircle_filter(pts[a], pts[b], pts[c], pts[d])
    det = det * sign
    bad = (det > bound) | (np.abs(det) <= bound) | (sign == 0)
    if not bad.any():
        return simplices
    suspects = np.sort(np.column_stack([a[bad], b[bad]]), axis=1)
    return _lawson_repair(pts, simplices, suspects)


def delaunay(points) -> BaseGraph:
    """Delaunay graph of a point set (n >= 2, distinct positions)."""
    pts = np.ascontiguousarray(points, dtype=np.float64).reshape(-1, 2)
    n = len(pts)
    if n < 2:
        raise GraphError("Delaunay graph needs at least 2 points")
    if len(np.unique(pts, axis=0)) != n:
        raise GraphError("coincident points")
    if n == 2 or _all_collinear(pts):
        # Voronoi cells are parallel strips; consecutive points are adjacent
        order = np.lexsort((pts[:, 1], pts[:, 0]))
        edges = np.column_stack([order[:-1], order[1:]])
        return from_edges(n, edges, pts)
    try:
        simplices = delaunay_triangles(pts)
    except QhullError as exc:  # pragma: no cover - collinear handled above
        raise GraphError(str(exc)) from exc
    return from_edges(n, _triangle_edges(simplices), pts)


# -- lattices ----------------------------------------------------------------


def lattice(dims, cyclic: bool = True) -> BaseGraph:
    """Regular lattice with nearest-neighbour edges and L1 distance.

    Vertex ids follow C order over ``dims`` (the last axis varies fastest).
    With ``cyclic`` every axis wraps around; a side of length 2 then has a
    single edge, and a side of 1 has none.
    """
    dims = tuple(int(s) for s in np.atleast_1d(dims))
    if any(s < 1 for s in dims) or int(np.prod(dims)) < 2:
        raise GraphError("lattice needs positive sides and at least 2 vertices")
    n = int(np.prod(dims))
    ids = np.arange(n).reshape(dims)
    coords = np.stack(np.unravel_index(np.arange(n), dims), axis=1).astype(np.float64)
    edges = []
    for axis, side in enumerate(dims):
        if side == 1:
            continue
        nxt = np.roll(ids, -1, axis=axis)
        src, dst = ids.ravel(), nxt.ravel()
        if not cyclic:
            coord = np.indices(dims)[axis].ravel()
            keep = coord < side - 1
            src, dst = src[keep], dst[keep]
        edges.append(np.column_stack([src, dst]))
    e = np.concatenate(edges)
    e.sort(axis=1)
    return from_edges(n, e, coords, metric=_kernels.LATTICE, dims=dims,
                      cyclic=(bool(cyclic),) * len(dims))


def ring(n: int) -> BaseGraph:
    return lattice([n], cyclic=True)


def check_invariants(g: BaseGraph) -> None:
    """Raise GraphError unless adjacency is symmetric, loop-free and duplicate-free."""
    src = np.repeat(np.arange(g.n), g.degree())
    if np.any(src == g.indices):
        raise GraphError("self-loop")
    for i in range(g.n):
        nb = g.neighbors(i)
        if np.any(np.diff(nb) <= 0):
            raise GraphError(f"vertex {i}: neighbours not strictly increasing")
    fwd = set(zip(src.tolist(), g.indices.tolist()))
    if any((j, i) not in fwd for i, j in fwd):
        raise GraphError("asymmetric adjacency")
