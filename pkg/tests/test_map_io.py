import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from avpark.exceptions import EmptyGrid, ParseError
from avpark.map_io import OccupancyGrid, load_grid, write_grid_text, write_path_csv


def test_text_map_transcribes_obstacles(tmp_path):
    f = tmp_path / "m.txt"
    f.write_text("..#\n...\n#..\n")
    g = load_grid(f)
    assert (g.width, g.height) == (3, 3)
    assert g.is_obstacle(2, 0) and g.is_obstacle(0, 2)
    assert int(g.cells.sum()) == 2


def test_ragged_rows_rejected(tmp_path):
    f = tmp_path / "m.txt"
    f.write_text("...\n..\n")
    with pytest.raises(ParseError):
        load_grid(f)


def test_illegal_character_rejected(tmp_path):
    f = tmp_path / "m.txt"
    f.write_text("..x\n...\n")
    with pytest.raises(ParseError):
        load_grid(f)


def test_empty_file(tmp_path):
    f = tmp_path / "m.txt"
    f.write_text("\n\n")
    with pytest.raises(EmptyGrid):
        load_grid(f)


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_grid(tmp_path / "nope.txt")


def test_pgm_p2_all_white_is_free(tmp_path):
    f = tmp_path / "m.pgm"
    f.write_text("P2\n# a comment\n4 3\n255\n" + "255 " * 12 + "\n")
    g = load_grid(f)
    assert (g.width, g.height) == (4, 3)
    assert not g.cells.any()


def _reference_p2(text):
    # independent decoder: strip comments, split tokens, threshold at 128
    tokens = []
    for line in text.splitlines():
        tokens += line.split("#", 1)[0].split()
    w, h, _ = int(tokens[1]), int(tokens[2]), int(tokens[3])
    vals = np.array([int(t) for t in tokens[4:4 + w * h]]).reshape(h, w)
    return vals < 128


def test_pgm_p2_single_dark_pixel(tmp_path):
    vals = np.full((10, 10), 255)
    vals[5, 5] = 0
    text = "P2\n10 10\n255\n" + "\n".join(" ".join(map(str, r)) for r in vals) + "\n"
    f = tmp_path / "m.pgm"
    f.write_text(text)
    g = load_grid(f)
    assert np.array_equal(g.cells, _reference_p2(text))
    assert g.is_obstacle(5, 5) and int(g.cells.sum()) == 1


def test_pgm_p5_binary(tmp_path):
    raw = bytes([0, 200, 127, 128, 255, 10])
    f = tmp_path / "m.pgm"
    f.write_bytes(b"P5\n3 2\n255\n" + raw)
    g = load_grid(f)
    assert g.cells.tolist() == [[True, False, True], [False, False, True]]


def test_bad_pgm_header(tmp_path):
    f = tmp_path / "m.pgm"
    f.write_bytes(b"P5\n3\n")
    with pytest.raises(ParseError):
        load_grid(f)


def test_path_csv_single_pose(tmp_path):
    f = tmp_path / "p.csv"
    write_path_csv([(1.0, 2.0, 0.0)], f)
    assert f.read_text() == "1.000000,2.000000,0.000000\n"


def test_path_csv_keeps_order(tmp_path):
    f = tmp_path / "p.csv"
    write_path_csv([(0, 0, 0), (1.5, -2, 3.14159)], f)
    assert f.read_text().splitlines() == ["0.000000,0.000000,0.000000",
                                          "1.500000,-2.000000,3.141590"]


def test_path_csv_rejects_empty(tmp_path):
    with pytest.raises(ValueError):
        write_path_csv([], tmp_path / "p.csv")


@given(arrays(bool, st.tuples(st.integers(1, 12), st.integers(1, 12))))
def test_text_round_trip(tmp_path_factory, cells):
    f = tmp_path_factory.mktemp("rt") / "g.txt"
    g = OccupancyGrid(cells)
    write_grid_text(g, f)
    assert load_grid(f) == g
    # same bytes, same grid
    assert load_grid(f) == load_grid(f)
