import io

import numpy as np
import pytest

from smallworld import ShortcutTable, augment_rank, delaunay, lattice
from smallworld.formats import (FormatError, header_line, read_graph, read_points, read_shortcuts,
                                write_graph, write_points, write_shortcuts)


def round_trip(write, read, obj):
    buf = io.StringIO()
    write(buf, obj, header_line("test", {"a": 1}))
    text = buf.getvalue()
    assert text.startswith("# smallworld ")
    return read(io.StringIO(text)), text


def test_points_round_trip_exact():
    pts = np.random.default_rng(0).random((50, 2))
    again, _ = round_trip(write_points, read_points, pts)
    assert np.array_equal(again, pts)


def test_graph_round_trip():
    g = delaunay(np.random.default_rng(1).random((40, 2)))
    again, text = round_trip(write_graph, read_graph, g)
    assert np.array_equal(again.edges(), g.edges()) and np.array_equal(again.coords, g.coords)
    buf = io.StringIO()
    write_graph(buf, again, header_line("test", {"a": 1}))
    assert buf.getvalue() == text


def test_lattice_round_trip():
    for g in (lattice([12]), lattice([4, 5], cyclic=False)):
        again, _ = round_trip(write_graph, read_graph, g)
        assert again.dims == g.dims and again.cyclic == g.cyclic
        assert np.array_equal(again.edges(), g.edges())


def test_shortcuts_round_trip():
    t = augment_rank(lattice([30]), out_degree=3, seed=1)
    again, text = round_trip(write_shortcuts, read_shortcuts, t)
    assert again == t
    assert len([ln for ln in text.splitlines() if not ln.startswith("#")]) == 1 + 30 * 3


@pytest.mark.parametrize("reader,text,line", [
    (read_points, "n 2\n0.1 0.2\n0.3\n", 3),
    (read_points, "n x\n", 1),
    (read_points, "n 1\n0.1 0.2\n5 5\n", 3),
    (read_graph, "n 2\n0 0\n1 1\n0 5\n", 4),
    (read_graph, "n 3\nlattice 4 cyclic 1\n", 2),
    (read_shortcuts, "n 2 outdeg 1\n0 1\n1 7\n", 3),
    (read_shortcuts, "n 2\n", 1),
])
def test_errors_have_line_numbers(reader, text, line):
    with pytest.raises(FormatError) as exc:
        reader(io.StringIO(text))
    assert exc.value.line == line


def test_missing_shortcut_rows():
    with pytest.raises(FormatError):
        read_shortcuts(io.StringIO("n 3 outdeg 1\n0 1\n1 2\n"))
    with pytest.raises(FormatError):
        read_points(io.StringIO(""))
