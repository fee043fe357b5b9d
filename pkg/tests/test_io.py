import math

import numpy as np
import pytest

from hdg_shapeopt import io
from hdg_shapeopt.geometry import box_shape

from conftest import UNIT_BOX, discretize


def test_config_file_and_overrides(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("# comment\npreset = experiment2\nk=2  # trailing\n\nmax_iters = 5\n")
    vals = io.read_config(p, ["k=1", "tol=1e-8"])
    assert vals == {"preset": "experiment2", "k": "1", "max_iters": "5", "tol": "1e-8"}


@pytest.mark.parametrize("text", ["novalue", "=3"])
def test_bad_assignment(text):
    with pytest.raises(io.ConfigError):
        io.parse_assignment(text)


def test_duplicate_keys_rejected(tmp_path):
    p = tmp_path / "dup.cfg"
    p.write_text("k=1\nk=2\n")
    with pytest.raises(io.ConfigError):
        io.read_config(p)


def test_missing_config_file(tmp_path):
    with pytest.raises(io.ConfigError):
        io.read_config(tmp_path / "absent.cfg")


def test_number_format():
    assert io.format_number(0.1) == "0.10000000000000001"
    assert io.format_number(math.nan) == "—"
    assert io.format_number(7) == "7"
    assert io.parse_number("—") != io.parse_number("—")


def test_csv_round_trip_is_exact(tmp_path):
    rng = np.random.default_rng(0)
    data = rng.normal(size=(5, 3)) * 10.0 ** rng.integers(-12, 12, (5, 3))
    data[2, 1] = math.nan
    path = tmp_path / "t.csv"
    io.write_csv(path, ["a", "b", "c"], data.tolist(), ["header line", "k=1"])
    text = path.read_text()
    assert text.startswith("# header line\n# k=1\na,b,c\n")
    cols, back = io.read_csv(path)
    assert cols == ["a", "b", "c"]
    np.testing.assert_array_equal(np.isnan(back), np.isnan(data))
    np.testing.assert_array_equal(back[~np.isnan(back)], data[~np.isnan(data)])


def test_csv_is_deterministic(tmp_path):
    rows = [[1, 0.5, math.nan]]
    io.write_csv(tmp_path / "a.csv", ["x", "y", "z"], rows)
    io.write_csv(tmp_path / "b.csv", ["x", "y", "z"], rows)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_polyline_round_trip(tmp_path):
    pts = np.random.default_rng(1).normal(size=(10, 2))
    io.write_polyline(tmp_path / "b.csv", pts)
    np.testing.assert_array_equal(io.read_polyline(tmp_path / "b.csv"), pts)


def test_vtk_layout(tmp_path):
    mesh, _, _ = discretize(box_shape(UNIT_BOX), UNIT_BOX, 2)
    path = tmp_path / "f.vtk"
    io.write_vtk(path, mesh, cell_data={"y_h": np.arange(mesh.n_elements, dtype=float)})
    lines = path.read_text().splitlines()
    assert lines[0] == "# vtk DataFile Version 3.0"
    assert lines[2] == "ASCII" and lines[3] == "DATASET UNSTRUCTURED_GRID"
    assert "POINTS 9 double" in lines
    assert f"CELLS {mesh.n_elements} {4 * mesh.n_elements}" in lines
    assert f"CELL_DATA {mesh.n_elements}" in lines
    assert "SCALARS y_h double 1" in lines


def test_vtk_rejects_wrong_length(tmp_path):
    mesh, _, _ = discretize(box_shape(UNIT_BOX), UNIT_BOX, 2)
    with pytest.raises(ValueError):
        io.write_vtk(tmp_path / "f.vtk", mesh, cell_data={"y_h": np.zeros(3)})
