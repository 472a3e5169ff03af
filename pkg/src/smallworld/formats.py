"""Plain-text files for point sets, base graphs and shortcut tables.

All formats share the same conventions: ``#`` lines are comments (the
writers put a provenance header there), the first record line carries the
counts, and floats are written with ``repr`` so they round-trip exactly.

Points::

    n <count>
    <x> <y>            (count lines)

Graph::

    n <count>
    lattice <side> [<side> ...] cyclic <0|1>      (lattices only)
    <x> <y>            (count lines, continuum only)
    <i> <j>            (one per undirected edge, i < j)

Shortcuts::

    n <count> outdeg <d>
    <source> <target>  (count * d lines)
"""
from __future__ import annotations

import itertools
import json
from typing import IO, Iterator

import numpy as np

from . import __version__, _kernels
from .augment import ShortcutTable
from .basegraph import BaseGraph, from_edges, lattice


class FormatError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def header_line(subcommand: str, flags: dict) -> str:
    return f"# smallworld {__version__} {subcommand} {json.dumps(flags, sort_keys=True)}\n"


def _records(fp: IO[str]) -> Iterator[tuple[int, list[str]]]:
    for lineno, raw in enumerate(fp, start=1):
        line = raw.strip()
        if line and not line.startswith("#"):
            yield lineno, line.split()


def _int(tok: str, lineno: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise FormatError(f"expected an integer, got {tok!r}", lineno) from None


def _float(tok: str, lineno: int) -> float:
    try:
        return float(tok)
    except ValueError:
        raise FormatError(f"expected a number, got {tok!r}", lineno) from None


def _count_line(rec, keyword="n") -> tuple[int, list[str]]:
    try:
        lineno, parts = next(rec)
    except StopIteration:
        raise FormatError("empty file") from None
    if len(parts) < 2 or parts[0] != keyword:
        raise FormatError(f"expected '{keyword} <count>'", lineno)
    return lineno, parts


def _read_xy(rec, n: int) -> np.ndarray:
    pts = np.empty((n, 2))
    for i in range(n):
        try:
            lineno, parts = next(rec)
        except StopIteration:
            raise FormatError(f"expected {n} coordinate lines, found {i}") from None
        if len(parts) != 2:
            raise FormatError("expected 'x y'", lineno)
        pts[i] = _float(parts[0], lineno), _float(parts[1], lineno)
    return pts


# -- points --------------------------------------------------------------------


def write_points(fp: IO[str], points: np.ndarray, header: str = "") -> None:
    fp.write(header)
    fp.write(f"n {len(points)}\n")
    for x, y in points:
        fp.write(f"{float(x)!r} {float(y)!r}\n")


def read_points(fp: IO[str]) -> np.ndarray:
    rec = _records(fp)
    lineno, parts = _count_line(rec)
    if len(parts) != 2:
        raise FormatError("expected 'n <count>'", lineno)
    n = _int(parts[1], lineno)
    pts = _read_xy(rec, n)
    extra = next(rec, None)
    if extra is not None:
        raise FormatError("unexpected trailing data", extra[0])
    return pts


# -- graphs --------------------------------------------------------------------


def write_graph(fp: IO[str], g: BaseGraph, header: str = "") -> None:
    fp.write(header)
    fp.write(f"n {g.n}\n")
    if g.is_lattice:
        sides = " ".join(str(s) for s in g.dims)
        fp.write(f"lattice {sides} cyclic {int(all(g.cyclic))}\n")
    else:
        for x, y in g.coords:
            fp.write(f"{float(x)!r} {float(y)!r}\n")
    for i, j in g.edges():
        fp.write(f"{i} {j}\n")


def read_graph(fp: IO[str]) -> BaseGraph:
    rec = _records(fp)
    lineno, parts = _count_line(rec)
    n = _int(parts[1], lineno)
    first = next(rec, None)
    if first is not None and first[1][0] == "lattice":
        lineno, parts = first
        if len(parts) < 4 or parts[-2] != "cyclic":
            raise FormatError("expected 'lattice <side>... cyclic <0|1>'", lineno)
        dims = [_int(t, lineno) for t in parts[1:-2]]
        g = lattice(dims, cyclic=bool(_int(parts[-1], lineno)))
        if g.n != n:
            raise FormatError(f"lattice has {g.n} vertices, header says {n}", lineno)
        # edges are implied by the lattice; any listed ones must match
        listed = [(lineno, p) for lineno, p in rec]
        if listed:
            edges = np.array([[_int(p[0], ln), _int(p[1], ln)] for ln, p in listed])
            if not np.array_equal(np.sort(np.sort(edges, axis=1), axis=0), np.sort(g.edges(), axis=0)):
                raise FormatError("edge list does not match the lattice")
        return g

    body = itertools.chain([] if first is None else [first], rec)
    pts = _read_xy(body, n)
    edges = []
    for lineno, parts in body:
        if len(parts) != 2:
            raise FormatError("expected 'i j'", lineno)
        i, j = _int(parts[0], lineno), _int(parts[1], lineno)
        if not (0 <= i < n and 0 <= j < n) or i == j:
            raise FormatError(f"invalid edge {i} {j}", lineno)
        edges.append((i, j))
    return from_edges(n, np.array(edges, dtype=np.int64).reshape(-1, 2), pts,
                      metric=_kernels.EUCLIDEAN)


# -- shortcuts -------------------------------------------------------------------


def write_shortcuts(fp: IO[str], table: ShortcutTable, header: str = "") -> None:
    fp.write(header)
    fp.write(f"n {table.n} outdeg {table.out_degree}\n")
    for x, row in enumerate(table.targets):
        for t in row:
            fp.write(f"{x} {t}\n")


def read_shortcuts(fp: IO[str]) -> ShortcutTable:
    rec = _records(fp)
    lineno, parts = _count_line(rec)
    if len(parts) != 4 or parts[2] != "outdeg":
        raise FormatError("expected 'n <count> outdeg <d>'", lineno)
    n, d = _int(parts[1], lineno), _int(parts[3], lineno)
    if n < 1 or d < 1:
        raise FormatError("count and out-degree must be positive", lineno)
    rows: list[list[int]] = [[] for _ in range(n)]
    for lineno, parts in rec:
        if len(parts) != 2:
            raise FormatError("expected 'source target'", lineno)
        s, t = _int(parts[0], lineno), _int(parts[1], lineno)
        if not (0 <= s < n and 0 <= t < n):
            raise FormatError(f"vertex out of range in '{s} {t}'", lineno)
        rows[s].append(t)
    bad = [x for x, r in enumerate(rows) if len(r) != d]
    if bad:
        raise FormatError(f"vertex {bad[0]} has {len(rows[bad[0]])} shortcuts, expected {d}")
    return ShortcutTable(np.array(rows, dtype=np.int64))
