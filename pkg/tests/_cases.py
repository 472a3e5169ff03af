"""Fixed small instances and the sampler cases shared by unit and acceptance tests."""
from __future__ import annotations

import zlib

import numpy as np

import _oracles as orc
from smallworld import PopularityDist, sample_target, augment_distance, augment_rank, augment_uniform, delaunay, lattice

DRAWS = 100_000


def small_points(n=10, seed=2024):
    return np.random.default_rng(seed).random((n, 2))


def small_instances():
    """(name, graph, exact distance matrix) for a few graphs with n <= 12."""
    pts = small_points()
    yield "delaunay10", delaunay(pts), orc.dist_matrix_points(pts)
    yield "ring11", lattice([11]), orc.dist_matrix_lattice([11], True)
    yield "torus3x4", lattice([3, 4]), orc.dist_matrix_lattice([3, 4], True)


def sampler_cases(draws=DRAWS):
    """Yield (label, observed counts, exact probabilities) for every sampler.

    Each augmentation case uses about ``draws`` shortcut draws in total,
    spread evenly over the sources through a large out-degree.
    """
    for name, g, D in small_instances():
        d = -(-draws // g.n)
        for alpha in (0.0, 1.0, 2.0):
            t = augment_distance(g, alpha, out_degree=d, seed=zlib.crc32(f"{name}{alpha}".encode()))
            yield f"distance(alpha={alpha:g}) on {name}", orc.table_counts(t.targets, g.n), orc.distance_law(D, alpha)
        t = augment_rank(g, out_degree=d, seed=7)
        yield f"rank on {name}", orc.table_counts(t.targets, g.n), orc.rank_law(D)
        t = augment_uniform(g, out_degree=d, seed=8)
        yield f"uniform on {name}", orc.table_counts(t.targets, g.n), orc.uniform_law(g.n)

    n = 12
    for beta in (0.0, 1.0, 2.0):
        dist = PopularityDist.power_law(n, beta, seed=99)
        rng = np.random.default_rng(int(beta * 10) + 1)
        counts = np.bincount([sample_target(dist, rng) for _ in range(draws)], minlength=n)
        yield f"popularity(beta={beta:g})", counts, orc.popularity_law(dist.ranking, beta)
