import numpy as np
import pytest

from mutsel import Field, Grid, GridMismatchError, inner_product, mass, norm
from mutsel.errors import MutselError
from mutsel.grid import field_from_csv, field_to_csv, normalized


def test_axis_geometry():
    g = Grid(1, 2.0, 9)
    assert g.h == 0.5
    assert np.allclose(g.axis(), -2 + 0.5 * np.arange(9))
    assert g.node(0) == -2.0 and g.node(8) == 2.0
    assert g.size == 9
    assert g.cell == 0.5


def test_dim2_points_row_major():
    g = Grid(2, 1.0, 9)
    pts = g.points()
    assert pts.shape == (81, 2)
    # index i*n + j maps to (x_i, y_j)
    assert np.allclose(pts[1], [-1.0, -1.0 + g.h])
    assert np.allclose(pts[9], [-1.0 + g.h, -1.0])
    assert g.cell == g.h**2


def test_trapezoid_weights():
    g = Grid(1, 1.0, 9)
    w = g.weights()
    assert w[0] == 0.5 and w[-1] == 0.5 and np.all(w[1:-1] == 1.0)
    w2 = Grid(2, 1.0, 9).weights().reshape(9, 9)
    assert w2[0, 0] == 0.25 and w2[0, 4] == 0.5 and w2[4, 4] == 1.0


def test_inner_product_matches_trapezoid_rule():
    g = Grid(1, 1.0, 401)
    x = g.axis()
    f = Field(g, x**2)
    one = Field(g, np.ones_like(x))
    expected = np.trapezoid(x**2, x)
    assert abs(inner_product(f, one) - expected) < 1e-14
    assert abs(mass(f) - expected) < 1e-14


def test_norms():
    g = Grid(1, 1.0, 1001)
    x = g.axis()
    f = Field(g, np.cos(np.pi * x))
    assert abs(norm(f, "sup") - 1.0) < 1e-12
    assert abs(norm(f, "L2") - 1.0) < 1e-6  # integral of cos^2 over [-1,1] is 1
    assert abs(norm(f, "L1") - 4 / np.pi) < 1e-5
    with pytest.raises(MutselError):
        norm(f, "L3")


def test_normalized():
    g = Grid(1, 1.0, 65)
    f = normalized(Field(g, np.exp(g.axis())))
    assert abs(norm(f, "L2") - 1.0) < 1e-14
    with pytest.raises(MutselError):
        normalized(Field(g, np.zeros(65)))


def test_field_rejects_bad_values():
    g = Grid(1, 1.0, 8)
    bad = np.ones(8)
    bad[3] = np.nan
    with pytest.raises(MutselError):
        Field(g, bad)
    with pytest.raises(GridMismatchError):
        Field(g, np.ones(9))


def test_field_values_are_immutable():
    g = Grid(1, 1.0, 8)
    f = Field(g, np.ones(8))
    with pytest.raises(ValueError):
        f.values[0] = 2.0


def test_grid_mismatch_raises():
    a = Field(Grid(1, 1.0, 8), np.ones(8))
    b = Field(Grid(1, 1.0, 9), np.ones(9))
    with pytest.raises(GridMismatchError):
        inner_product(a, b)


def test_field_csv_round_trip(tmp_path):
    g = Grid(1, 1.5, 33)
    f = Field(g, np.sin(g.axis()))
    path = tmp_path / "f.csv"
    field_to_csv(f, path)
    back = field_from_csv(g, path)
    assert np.array_equal(back.values, f.values)
    header = path.read_text().splitlines()[0]
    assert header == "x,value"


def test_field_csv_grid_check(tmp_path):
    g = Grid(1, 1.0, 9)
    path = tmp_path / "f.csv"
    field_to_csv(Field(g, np.ones(9)), path)
    with pytest.raises(GridMismatchError):
        field_from_csv(Grid(1, 2.0, 9), path)


def test_dim2_csv_round_trip(tmp_path):
    g = Grid(2, 1.0, 9)
    f = Field.from_function(g, lambda x, y: x + 2 * y)
    path = tmp_path / "f2.csv"
    field_to_csv(f, path)
    back = field_from_csv(g, path)
    assert np.array_equal(back.values, f.values)
    assert path.read_text().splitlines()[0] == "x,y,value"


def test_grid_validation():
    with pytest.raises(MutselError):
        Grid(3, 1.0, 16)
    with pytest.raises(MutselError):
        Grid(1, -1.0, 16)
    with pytest.raises(MutselError):
        Grid(1, 1.0, 4)
