"""Orientation and in-circle predicates with an exact fallback.

Inputs are IEEE doubles, which are dyadic rationals, so converting them
to :class:`fractions.Fraction` and evaluating the determinant there gives
the exact sign. The float evaluation is used whenever its magnitude clears
a forward error bound (Shewchuk's "A" bounds, doubled for margin).
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np

_EPS = np.finfo(np.float64).eps / 2.0
CCW_ERRBOUND = 2.0 * (3.0 + 16.0 * _EPS) * _EPS
ICC_ERRBOUND = 2.0 * (10.0 + 96.0 * _EPS) * _EPS


def _sign(v) -> int:
    return int(v > 0) - int(v < 0)


def orient2d_exact(a, b, c) -> int:
    ax, ay = Fraction(a[0]), Fraction(a[1])
    bx, by = Fraction(b[0]), Fraction(b[1])
    cx, cy = Fraction(c[0]), Fraction(c[1])
    return _sign((bx - ax) * (cy - ay) - (by - ay) * (cx - ax))


def orient2d(a, b, c) -> int:
    """Sign of the signed area of triangle abc: +1 counter-clockwise."""
    detl = (a[0] - c[0]) * (b[1] - c[1])
    detr = (a[1] - c[1]) * (b[0] - c[0])
    det = detl - detr
    if abs(det) > CCW_ERRBOUND * (abs(detl) + abs(detr)):
        return _sign(det)
    return orient2d_exact(a, b, c)


def incircle_exact(a, b, c, d) -> int:
    dx, dy = Fraction(d[0]), Fraction(d[1])
    rows = []
    for p in (a, b, c):
        px, py = Fraction(p[0]) - dx, Fraction(p[1]) - dy
        rows.append((px, py, px * px + py * py))
    (adx, ady, alift), (bdx, bdy, blift), (cdx, cdy, clift) = rows
    det = (
        alift * (bdx * cdy - cdx * bdy)
        + blift * (cdx * ady - adx * cdy)
        + clift * (adx * bdy - bdx * ady)
    )
    return _sign(det)


def incircle(a, b, c, d) -> int:
    """+1 if d lies strictly inside the circle through a, b, c (given CCW)."""
    det, bound = incircle_filter(
        np.asarray(a, float)[None],
        np.asarray(b, float)[None],
        np.asarray(c, float)[None],
        np.asarray(d, float)[None],
    )
    if abs(det[0]) > bound[0]:
        return _sign(det[0])
    return incircle_exact(a, b, c, d)


def incircle_filter(a: np.ndarray, b: np.ndarray, c: np.ndarray, d: np.ndarray):
    """Vectorised float in-circle determinant and its error bound.

    All arguments are (m, 2) arrays. Where ``abs(det) <= bound`` the float
    sign is not trustworthy and the caller must use :func:`incircle_exact`.
    """
    adx, ady = a[:, 0] - d[:, 0], a[:, 1] - d[:, 1]
    bdx, bdy = b[:, 0] - d[:, 0], b[:, 1] - d[:, 1]
    cdx, cdy = c[:, 0] - d[:, 0], c[:, 1] - d[:, 1]

    bdxcdy, cdxbdy = bdx * cdy, cdx * bdy
    cdxady, adxcdy = cdx * ady, adx * cdy
    adxbdy, bdxady = adx * bdy, bdx * ady
    alift = adx * adx + ady * ady
    blift = bdx * bdx + bdy * bdy
    clift = cdx * cdx + cdy * cdy

    det = alift * (bdxcdy - cdxbdy) + blift * (cdxady - adxcdy) + clift * (adxbdy - bdxady)
    permanent = (
        (np.abs(bdxcdy) + np.abs(cdxbdy)) * alift
        + (np.abs(cdxady) + np.abs(adxcdy)) * blift
        + (np.abs(adxbdy) + np.abs(bdxady)) * clift
    )
    return det, ICC_ERRBOUND * permanent


def orient2d_filter(a: np.ndarray, b: np.ndarray, c: np.ndarray):
    detl = (a[:, 0] - c[:, 0]) * (b[:, 1] - c[:, 1])
    detr = (a[:, 1] - c[:, 1]) * (b[:, 0] - c[:, 0])
    return detl - detr, CCW_ERRBOUND * (np.abs(detl) + np.abs(detr))
