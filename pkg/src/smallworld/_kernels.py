"""Compiled inner loops.

Graph state is passed as flat arrays so the kernels stay free of Python
objects:

* ``indptr``/``indices`` - CSR adjacency of the base graph
* ``coords`` - (n, D) float coordinates; lattice coordinates are integral
* ``metric`` - 0 for Euclidean, 1 for L1 with optional per-axis wrap
* ``extent``/``wrap`` - lattice side lengths and cyclic flags

For the Euclidean metric the comparison key is the *squared* distance so
no square roots are taken on the hot path; it orders vertices exactly as
the distance does.
"""
from __future__ import annotations

import numpy as np
from numba import njit

ARRIVED = 0
DEAD_END = 1
STEP_CAP = 2

EUCLIDEAN = 0
LATTICE = 1


@njit(cache=True, inline="always")
def dist_key(coords, metric, extent, wrap, i, j):
    if metric == EUCLIDEAN:
        dx = coords[i, 0] - coords[j, 0]
        dy = coords[i, 1] - coords[j, 1]
        return dx * dx + dy * dy
    s = 0.0
    for k in range(coords.shape[1]):
        d = abs(coords[i, k] - coords[j, k])
        if wrap[k] and extent[k] - d < d:
            d = extent[k] - d
        s += d
    return s


@njit(cache=True)
def greedy_walk(indptr, indices, shortcuts, coords, metric, extent, wrap,
                source, target, step_cap, path):
    """Fill ``path`` with the greedy walk; return (hops, outcome)."""
    x = source
    path[0] = x
    hops = 0
    while x != target:
        if hops >= step_cap:
            return hops, STEP_CAP
        here = dist_key(coords, metric, extent, wrap, x, target)
        best = -1
        best_key = np.inf
        for e in range(indptr[x], indptr[x + 1]):
            y = indices[e]
            k = dist_key(coords, metric, extent, wrap, y, target)
            if k < best_key or (k == best_key and y < best):
                best = y
                best_key = k
        for s in range(shortcuts.shape[1]):
            y = shortcuts[x, s]
            if y == x:
                continue
            k = dist_key(coords, metric, extent, wrap, y, target)
            if k < best_key or (k == best_key and y < best):
                best = y
                best_key = k
        if best < 0 or not best_key < here:
            return hops, DEAD_END
        x = best
        hops += 1
        path[hops] = x
    return hops, ARRIVED


@njit(cache=True)
def route_many(indptr, indices, shortcuts, coords, metric, extent, wrap,
               sources, targets, step_cap):
    m = sources.shape[0]
    hops = np.empty(m, np.int64)
    outcomes = np.empty(m, np.int8)
    path = np.empty(step_cap + 1, np.int64)
    for q in range(m):
        h, o = greedy_walk(indptr, indices, shortcuts, coords, metric, extent, wrap,
                           sources[q], targets[q], step_cap, path)
        hops[q] = h
        outcomes[q] = o
    return hops, outcomes


# -- alias tables --------------------------------------------------------


@njit(cache=True)
def build_alias(weights):
    """Vose's alias method. Returns (prob, alias) for ``len(weights)`` items."""
    n = weights.shape[0]
    total = 0.0
    for i in range(n):
        total += weights[i]
    scaled = weights * (n / total)
    prob = np.ones(n)
    alias = np.arange(n)
    small = np.empty(n, np.int64)
    large = np.empty(n, np.int64)
    ns = 0
    nl = 0
    for i in range(n):
        if scaled[i] < 1.0:
            small[ns] = i
            ns += 1
        else:
            large[nl] = i
            nl += 1
    while ns > 0 and nl > 0:
        ns -= 1
        s = small[ns]
        g = large[nl - 1]
        prob[s] = scaled[s]
        alias[s] = g
        scaled[g] = (scaled[g] + scaled[s]) - 1.0
        if scaled[g] < 1.0:
            nl -= 1
            small[ns] = g
            ns += 1
    # leftovers are exactly 1 up to rounding
    return prob, alias


@njit(cache=True, inline="always")
def alias_draw(rng, prob, alias, labels, uniform):
    n = prob.shape[0]
    i = rng.integers(0, n)
    if not uniform and rng.random() >= prob[i]:
        i = alias[i]
    return labels[i]


# -- static augmentation -------------------------------------------------


@njit(cache=True)
def distance_targets(coords, metric, extent, wrap, alpha, u):
    """Inverse-CDF draws of ``d(x, y)**-alpha`` targets, one row per source.

    ``u`` is (n, d) uniforms in [0, 1); each row is sorted in place so a
    single cumulative pass per source serves all of its draws.
    """
    n, d = u.shape
    out = np.empty((n, d), np.int64)
    # weight = key ** power; the Euclidean key is squared
    power = -alpha / 2.0 if metric == EUCLIDEAN else -alpha
    order = np.empty(d, np.int64)
    for x in range(n):
        total = 0.0
        for y in range(n):
            if y != x:
                k = dist_key(coords, metric, extent, wrap, x, y)
                if k == 0.0:
                    return out, x, y
                if alpha == 0.0:
                    total += 1.0
                elif power == -1.0:
                    total += 1.0 / k
                else:
                    total += k ** power
        order[:] = np.argsort(u[x])
        j = 0
        acc = 0.0
        last = -1
        for y in range(n):
            if y == x:
                continue
            k = dist_key(coords, metric, extent, wrap, x, y)
            if alpha == 0.0:
                acc += 1.0
            elif power == -1.0:
                acc += 1.0 / k
            else:
                acc += k ** power
            last = y
            while j < d and u[x, order[j]] * total < acc:
                out[x, order[j]] = y
                j += 1
            if j == d:
                break
        while j < d:
            out[x, order[j]] = last
            j += 1
    return out, -1, -1


@njit(cache=True, inline="always")
def _less(keys, a, b):
    return keys[a] < keys[b] or (keys[a] == keys[b] and a < b)


@njit(cache=True)
def _select(keys, items, r):
    """Place the r-th smallest (0-based) item by (key, id) at items[r]."""
    lo = 0
    hi = items.shape[0] - 1
    while hi > lo:
        mid = (lo + hi) // 2
        # median of three
        a, b, c = items[lo], items[mid], items[hi]
        if _less(keys, b, a):
            a, b = b, a
        if _less(keys, c, b):
            b, c = c, b
            if _less(keys, b, a):
                a, b = b, a
        pivot = b
        i = lo
        j = hi
        while i <= j:
            while _less(keys, items[i], pivot):
                i += 1
            while _less(keys, pivot, items[j]):
                j -= 1
            if i <= j:
                t = items[i]
                items[i] = items[j]
                items[j] = t
                i += 1
                j -= 1
        if r <= j:
            hi = j
        elif r >= i:
            lo = i
        else:
            return items[r]
    return items[r]


@njit(cache=True)
def rank_targets(coords, metric, extent, wrap, ranks):
    """Vertex holding 1-based ``ranks[x, s]`` in x's (distance, id) ordering."""
    n, d = ranks.shape
    out = np.empty((n, d), np.int64)
    keys = np.empty(n)
    items = np.empty(n - 1, np.int64)
    for x in range(n):
        for y in range(n):
            keys[y] = dist_key(coords, metric, extent, wrap, x, y)
        m = 0
        for y in range(n):
            if y != x:
                items[m] = y
                m += 1
        if d == 1:
            out[x, 0] = _select(keys, items, ranks[x, 0] - 1)
        else:
            # ties in a stable sort keep ascending ids
            order = np.argsort(keys[items], kind="mergesort")
            for s in range(d):
                out[x, s] = items[order[ranks[x, s] - 1]]
    return out


# -- destination sampling --------------------------------------------------


@njit(cache=True)
def ds_steps(indptr, indices, table, coords, metric, extent, wrap, p,
             src_prob, src_alias, src_labels, src_uniform,
             tgt_prob, tgt_alias, tgt_labels, tgt_uniform,
             nsteps, step_cap, rng, walk_lengths, offset, counters, path):
    """Run ``nsteps`` rewiring steps, mutating ``table`` in place.

    ``walk_lengths[offset + s]`` receives the hop count of step s, or -1 when
    the drawn source equals the destination. ``counters`` accumulates
    [replacements, truncated walks, dead ends]. Returns the number of
    vertices eligible for replacement in the final step.
    """
    d = table.shape[1]
    eligible = 0
    for s in range(nsteps):
        y = alias_draw(rng, src_prob, src_alias, src_labels, src_uniform)
        z = alias_draw(rng, tgt_prob, tgt_alias, tgt_labels, tgt_uniform)
        if y == z:
            walk_lengths[offset + s] = -1
            eligible = 0
            continue
        hops, outcome = greedy_walk(indptr, indices, table, coords, metric, extent, wrap,
                                    y, z, step_cap, path)
        walk_lengths[offset + s] = hops
        if outcome == ARRIVED:
            eligible = hops
        else:
            # visited prefix never contains z
            eligible = hops + 1
            if outcome == STEP_CAP:
                counters[1] += 1
            else:
                counters[2] += 1
        for i in range(eligible):
            if rng.random() < p:
                slot = 0 if d == 1 else rng.integers(0, d)
                table[path[i], slot] = z
                counters[0] += 1
    return eligible
