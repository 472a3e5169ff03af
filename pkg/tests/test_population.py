import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import _oracles as orc
from smallworld import Metropolis, RandomZones, Raster, RasterGrid, Uniform, load_raster, sample_points, zone_weights
from smallworld.population import PopulationError, RasterFormatError, country_grid, dump_raster

MODELS = [Uniform(), Metropolis(), RandomZones(10, 1.2, 3), Raster(RasterGrid(3, 2, [0, 1, 2, 3, 0, 5]))]


def test_uniform_single_zone():
    z = zone_weights(Uniform())
    assert list(z) == [((0.0, 0.0, 1.0, 1.0), 1.0)]


def test_random_zones_gamma_zero_is_even():
    z = zone_weights(RandomZones(2, 0.0, seed=5))
    assert np.allclose(z.weights, 0.25)
    assert sorted(map(tuple, z.rects)) == [(0, 0, .5, .5), (0, .5, .5, 1), (.5, 0, 1, .5), (.5, .5, 1, 1)]


def test_random_zones_fixed_labels():
    z = zone_weights(RandomZones(2, 1.2, labels=(1, 2, 3, 4)))
    total = math.fsum(s ** -1.2 for s in (1, 2, 3, 4))
    assert z.weights.tolist() == pytest.approx([s ** -1.2 / total for s in (1, 2, 3, 4)], rel=1e-14)


@pytest.mark.parametrize("model", MODELS + [RandomZones(100, 1.2, 0), Raster(country_grid())],
                         ids=lambda m: m.name)
def test_weights_sum_to_one(model):
    z = zone_weights(model)
    assert abs(math.fsum(z.weights) - 1.0) <= 1e-12
    assert np.all(z.weights >= 0)


def test_two_cell_raster():
    grid = load_raster("ncols 2\nnrows 1\n1 3\n")
    assert (grid.ncols, grid.nrows) == (2, 1)
    assert zone_weights(Raster(grid)).weights.tolist() == [0.25, 0.75]


def test_equal_raster_is_uniform():
    z = zone_weights(Raster(RasterGrid(4, 3, np.full(12, 7.0))))
    assert np.allclose(z.weights, 1 / 12)


def test_one_hot_raster_confines_points():
    grid = load_raster("ncols 3\nnrows 3\n0 0 0\n0 0 4\n0 0 0\n")
    pts = sample_points(Raster(grid), 500, seed=1)
    x0, y0, x1, y1 = grid.cell_rect(1, 2)
    assert (x0, y0, x1, y1) == pytest.approx((2 / 3, 1 / 3, 1.0, 2 / 3))
    assert np.all((pts[:, 0] >= x0) & (pts[:, 0] < x1) & (pts[:, 1] >= y0) & (pts[:, 1] < y1))


def test_top_row_maps_to_top_of_square():
    grid = load_raster("ncols 1\nnrows 2\n1\n0\n")
    pts = sample_points(Raster(grid), 200, seed=2)
    assert np.all(pts[:, 1] >= 0.5)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(MODELS), st.integers(1, 3000), st.integers(0, 2**32 - 1))
def test_points_in_unit_square_and_distinct(model, n, seed):
    pts = sample_points(model, n, seed)
    assert len(pts) >= 1
    assert np.all((pts >= 0) & (pts <= 1))
    assert len(np.unique(pts, axis=0)) == len(pts)


def test_seeded_determinism():
    for m in MODELS:
        assert np.array_equal(sample_points(m, 400, 9), sample_points(m, 400, 9))


def test_poisson_count_mean():
    counts = [len(sample_points(Uniform(), 1000, s)) for s in range(100)]
    assert 900 <= np.mean(counts) <= 1100
    # the spread is Poisson too: sd about sqrt(1000)
    assert 20 < np.std(counts) < 45


def test_tiny_target_still_yields_points():
    for s in range(20):
        assert len(sample_points(Uniform(), 1, s)) >= 1


def test_zone_occupancy():
    model = RandomZones(4, 1.2, seed=21)
    pts = sample_points(model, 100_000, seed=4)
    zone = np.floor(pts[:, 1] * 4).astype(int) * 4 + np.floor(pts[:, 0] * 4).astype(int)
    counts = np.bincount(zone, minlength=16)
    labels = model.zone_labels()
    w = np.array([s ** -1.2 for s in labels])
    assert orc.chi2_pvalue(counts, w / w.sum()) > 0.001


def test_metropolis_core_fraction():
    r = 0.2 * math.sqrt(2) / 2
    inside = total = 0
    for s in range(10):
        pts = sample_points(Metropolis(), 20_000, seed=s)
        inside += int(np.sum(np.hypot(pts[:, 0] - 0.5, pts[:, 1] - 0.5) <= r))
        total += len(pts)
    assert abs(inside / total - 0.90) <= 0.01


def test_invalid_models():
    with pytest.raises(PopulationError):
        RandomZones(0)
    with pytest.raises(PopulationError):
        RandomZones(2, 1.0, labels=(1, 1, 2, 3))
    with pytest.raises(PopulationError):
        sample_points(Uniform(), 0)


@pytest.mark.parametrize("text,line", [
    ("ncols 2\nnrows 1\n1\n", 3),
    ("ncols 2\nnrows 1\n1 x\n", 3),
    ("ncols 2\nnrows 1\n1 -2\n", 3),
    ("ncols two\nnrows 1\n1 2\n", 1),
    ("nrows 1\nbogus 3\n1 2\n", 2),
    ("ncols 2\nnrows 1\n1 2\n3 4\n", 4),
    ("ncols 2\nnrows 1\n0 0\n", 3),
])
def test_raster_errors_carry_line(text, line):
    with pytest.raises(RasterFormatError) as exc:
        load_raster(text)
    assert exc.value.line == line


def test_raster_missing_rows_and_header():
    with pytest.raises(RasterFormatError):
        load_raster("ncols 2\nnrows 3\n1 2\n")
    with pytest.raises(RasterFormatError):
        load_raster("# only a comment\n")


def test_raster_esri_keys_and_nodata():
    text = ("ncols 3\nnrows 2\nxllcorner 100\nyllcorner 5\ncellsize 1000\nNODATA_value -9999\n"
            "# comment\n1 -9999 2\n0 0 5\n")
    grid = load_raster(io.BytesIO(text.encode()))
    assert grid.as_array().tolist() == [[1, 0, 2], [0, 0, 5]]


def test_raster_round_trip():
    grid = country_grid()
    buf = io.StringIO()
    dump_raster(grid, buf)
    again = load_raster(buf.getvalue())
    assert np.array_equal(again.cells, grid.cells)
    assert (grid.cells > 0).mean() < 0.5
