import csv
import math

import numpy as np
import pytest

from smallworld import PopularityDist, ShortcutTable, lattice
from smallworld.experiment import (CSV_COLUMNS, ExperimentSpec, MethodSpec, ModelSpec, cell_seed,
                                   degree_bucket, degree_histogram, draw_queries, fit_scaling, manifest,
                                   run_cell, run_combined, run_scaling)


def spec(**kw):
    base = dict(model=ModelSpec("uniform"), sizes=(150, 300, 600),
                methods=(MethodSpec("uniform"), MethodSpec("distance", 2.0), MethodSpec("rank"), MethodSpec("ds")),
                queries_per_size=300, replicates=2, base_seed=5)
    base.update(kw)
    return ExperimentSpec(**base)


def rows(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def test_single_cell_smoke():
    s = ExperimentSpec(sizes=(200,), methods=(MethodSpec("uniform"),), queries_per_size=1, replicates=1)
    res = run_scaling(s)
    assert len(res.records) == 1
    assert res.records[0].mean_hops >= 0 and res.records[0].success_rate == 1.0


def test_one_row_per_cell_and_columns():
    res = run_scaling(spec())
    table = rows(res.to_csv())
    assert len(table) == 3 * 4 * 2
    assert tuple(table[0]) == tuple(CSV_COLUMNS)
    assert res.to_csv().startswith("# smallworld ")


def test_paired_cells_share_instance_and_queries():
    s = spec(sizes=(300,), replicates=1)
    recs, tables, hops = run_cell(s, 300, 0, keep=True)
    assert len({r.size_realized for r in recs}) == 1
    assert len({r.seed for r in recs}) == 1
    assert {len(h) for h in hops.values()} == {300}
    # same instance: every table has one row per vertex of the shared graph
    assert {t.n for t in tables.values()} == {recs[0].size_realized}


def test_replicates_use_distinct_seeds():
    seeds = {cell_seed(0, size, rep) for size in (100, 200) for rep in range(5)}
    assert len(seeds) == 10
    assert cell_seed(0, 100, 1) != cell_seed(1, 100, 1)


def test_deterministic_and_worker_independent():
    s = spec(sizes=(100, 200, 300), queries_per_size=100)
    assert run_scaling(s).to_csv() == run_scaling(s, workers=2).to_csv()


def test_summary_interval_uses_pooled_error():
    res = run_scaling(spec(sizes=(150, 200, 250), methods=(MethodSpec("uniform"),)))
    recs = res.select("uniform", 150)
    mean, se = res.summary("uniform", 150)
    assert mean == pytest.approx(np.mean([r.mean_hops for r in recs]))
    assert se == pytest.approx(math.sqrt(sum(r.stderr_hops ** 2 for r in recs)) / len(recs))
    lo, hi = res.interval("uniform", 150)
    assert hi - lo == pytest.approx(2 * 1.96 * se)


def test_queries_have_distinct_endpoints():
    rng = np.random.default_rng(0)
    src, dst = draw_queries(5, PopularityDist.power_law(5, 2.0, seed=1), 5000, rng)
    assert np.all(src != dst)
    # targets keep the popularity law; the most popular vertex dominates
    top = PopularityDist.power_law(5, 2.0, seed=1).ranking[0]
    assert np.mean(dst == top) > 0.6


def test_fit_recovers_log_squared():
    n = np.array([1e3, 4e3, 1.6e4, 6.4e4])
    fits = fit_scaling({"m": (n, 0.3 * np.log(n) ** 2)})["m"]
    assert fits.c == pytest.approx(0.3) and fits.log2_residual < 1e-12
    assert fits.power_residual > fits.log2_residual


def test_fit_recovers_power_law():
    n = np.array([1e3, 4e3, 1.6e4, 6.4e4])
    f = fit_scaling({"m": (n, 2.0 * n ** 0.33)})["m"]
    assert f.slope == pytest.approx(0.33) and f.power_b == pytest.approx(0.33, rel=1e-6)
    assert f.power_residual < 1e-6 < f.log2_residual


def test_fit_needs_three_sizes():
    with pytest.raises(ValueError):
        fit_scaling({"m": ([100, 200], [3, 4])})


def test_degree_histogram_examples():
    h = degree_histogram(ShortcutTable(np.arange(100)))
    assert h.buckets == {10: 1.0}
    star = ShortcutTable(np.zeros(100, dtype=np.int64))
    h = degree_histogram(star, lattice([100]))
    assert h.buckets == {10: 0.99, 100: 0.01}
    bounds, ccdf = h.ccdf()
    assert bounds.tolist() == [10, 100] and ccdf.tolist() == pytest.approx([1.0, 0.01])
    assert degree_bucket([0, 1, 10, 11, 95]).tolist() == [10, 10, 10, 20, 100]
    assert h.to_csv().splitlines() == ["bucket,fraction", "10,0.99", "100,0.01"]


def test_spec_round_trip_and_manifest():
    s = spec(model=ModelSpec("random-zones", k=10, gamma=1.2, zone_seed=3), popularity_beta=1.0)
    assert ExperimentSpec.from_dict(s.to_dict()) == s
    res = run_combined(spec(sizes=(100, 150, 200), queries_per_size=50, replicates=1, popularity_beta=1.0))
    m = manifest(res)
    again = run_scaling(ExperimentSpec.from_dict(m))
    assert again.to_csv() == res.to_csv()
    assert len(m["cells"]) == 3


def test_lattice_models():
    res = run_scaling(ExperimentSpec(model=ModelSpec("ring"), sizes=(64, 128, 256),
                                     methods=(MethodSpec("ds"),), queries_per_size=100, replicates=1))
    assert [r.size_realized for r in res.records] == [64, 128, 256]
    res = run_scaling(ExperimentSpec(model=ModelSpec("lattice"), sizes=(100,),
                                     methods=(MethodSpec("distance", 2.0),), queries_per_size=50, replicates=1))
    assert res.records[0].size_realized == 100
    with pytest.raises(ValueError):
        run_combined(ExperimentSpec(model=ModelSpec("ring"), sizes=(64,)))


def test_invalid_specs():
    with pytest.raises(ValueError):
        ExperimentSpec(sizes=(100, 50))
    with pytest.raises(ValueError):
        MethodSpec("magic")
    with pytest.raises(ValueError):
        ModelSpec("raster")
    with pytest.raises(ValueError):
        ExperimentSpec(methods=(MethodSpec("ds"), MethodSpec("ds")))
