import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import _cases
import _oracles as orc
from smallworld import (PopularityDist, ShortcutTable, augment_distance, augment_rank, augment_uniform,
                        delaunay, lattice, rank_of, sample_target)
from smallworld.augment import AugmentError

ALPHA = 0.001


@pytest.mark.parametrize("label,counts,probs", list(_cases.sampler_cases(draws=30_000)),
                         ids=lambda v: v if isinstance(v, str) else "")
def test_sampler_matches_exact_law(label, counts, probs):
    assert orc.chi2_pvalue(counts, probs) > ALPHA


def test_chi_square_has_power():
    # the rank law is easily told apart from the inverse-square law
    name, g, D = next(_cases.small_instances())
    t = augment_rank(g, out_degree=3000, seed=1)
    counts = orc.table_counts(t.targets, g.n)
    assert orc.chi2_pvalue(counts, orc.distance_law(D, 2.0)) < 1e-6


def test_alpha_zero_is_uniform():
    g = delaunay(_cases.small_points())
    a = orc.table_counts(augment_distance(g, 0.0, out_degree=5000, seed=3).targets, g.n)
    b = orc.table_counts(augment_uniform(g, out_degree=5000, seed=4).targets, g.n)
    assert orc.chi2_pvalue(a, orc.uniform_law(g.n)) > ALPHA
    assert orc.chi2_pvalue(b, orc.uniform_law(g.n)) > ALPHA


@pytest.mark.parametrize("make", [
    lambda g, s: augment_distance(g, 2.0, 2, s),
    lambda g, s: augment_distance(g, 1.0, 1, s),
    lambda g, s: augment_rank(g, 3, s),
    lambda g, s: augment_uniform(g, 2, s),
])
def test_no_self_loops_and_shape(make):
    for g in (delaunay(np.random.default_rng(1).random((60, 2))), lattice([7, 5])):
        t = make(g, 5)
        assert t.targets.shape[0] == g.n
        assert not np.any(t.targets == np.arange(g.n)[:, None])
        assert t == make(g, 5)


def test_two_vertices_forced():
    g = delaunay([[0.1, 0.1], [0.7, 0.2]])
    for t in (augment_distance(g, 2.0, 4, 0), augment_rank(g, 4, 0), augment_uniform(g, 4, 0)):
        assert t.targets.tolist() == [[1] * 4, [0] * 4]


def test_bad_parameters_rejected():
    g = lattice([4])
    with pytest.raises(AugmentError):
        augment_distance(g, -1.0)
    with pytest.raises(AugmentError):
        augment_uniform(g, 0)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 40), st.integers(0, 10_000))
def test_rank_is_a_bijection(n, seed):
    g = delaunay(np.random.default_rng(seed).random((n, 2))) if n > 2 else lattice([2])
    for x in range(min(n, 5)):
        ranks = sorted(rank_of(g, x, y) for y in range(n) if y != x)
        assert ranks == list(range(1, n))


def test_rank_of_matches_direct_ordering():
    g = lattice([9])
    D = orc.dist_matrix_lattice([9], True)
    for x in range(9):
        order = sorted((y for y in range(9) if y != x), key=lambda y: (D[x, y], y))
        assert [rank_of(g, x, y) for y in order] == list(range(1, 9))
    with pytest.raises(AugmentError):
        rank_of(g, 2, 2)


def test_nearest_neighbour_has_rank_one():
    pts = _cases.small_points()
    g = delaunay(pts)
    D = orc.dist_matrix_points(pts)
    for x in range(g.n):
        D[x, x] = np.inf
        assert rank_of(g, x, int(np.argmin(D[x]))) == 1


def test_popularity_probabilities_and_alias():
    dist = PopularityDist.power_law(12, 1.5, seed=3)
    assert np.allclose(dist.probabilities(), orc.popularity_law(dist.ranking, 1.5), rtol=1e-13)
    u = PopularityDist.uniform(5)
    assert u.is_uniform and np.allclose(u.probabilities(), 0.2)
    s = sample_target(u, np.random.default_rng(0))
    assert 0 <= s < 5


def test_popularity_needs_permutation():
    with pytest.raises(AugmentError):
        PopularityDist(3, 1.0, np.array([0, 0, 1]))


def test_shortcut_table_counts():
    t = ShortcutTable(np.array([[0, 2], [0, 0], [1, 1]]))
    assert t.out_degree == 2
    assert t.in_degree().tolist() == [3, 2, 1]
    assert t.self_loop_fraction() == pytest.approx(1 / 6)
    with pytest.raises(AugmentError):
        ShortcutTable(np.array([[3], [0], [1]]))
