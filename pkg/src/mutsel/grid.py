"""Truncated uniform grids, sampled fields, and discrete inner products.

The domain is the box [-R, R]^dim (dim in {1, 2}) with n nodes per axis,
node(i) = -R + i*h, h = 2R/(n-1). All integrals of sampled fields use the
trapezoidal rule; the weight vector is 1 everywhere except 1/2 on boundary
nodes, and the dim=2 weight is the outer product. The trapezoid rule is what
makes the discrete convolution operator exactly self-adjoint (see operator).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatchError, MutselError


@dataclass(frozen=True)
class Grid:
    """Uniform lattice on [-radius, radius]^dim."""

    dim: int
    radius: float
    n: int

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise MutselError(f"dim must be 1 or 2, got {self.dim}")
        if self.n < 8:
            raise MutselError(f"need n >= 8 nodes per axis, got {self.n}")
        if not self.radius > 0:
            raise MutselError(f"radius must be positive, got {self.radius}")

    @property
    def h(self) -> float:
        return 2.0 * self.radius / (self.n - 1)

    @property
    def size(self) -> int:
        return self.n**self.dim

    @property
    def cell(self) -> float:
        """Volume element h^dim."""
        return self.h**self.dim

    def node(self, i: int) -> float:
        # exact reconstruction used by tests: node(i) = -R + i*h
        return -self.radius + i * self.h

    def axis(self) -> np.ndarray:
        return -self.radius + self.h * np.arange(self.n)

    def points(self) -> np.ndarray:
        """Node coordinates, shape (size,) for dim=1 and (size, 2) for dim=2.

        dim=2 uses row-major order: index i*n + j is (x_i, y_j).
        """
        ax = self.axis()
        if self.dim == 1:
            return ax
        X, Y = np.meshgrid(ax, ax, indexing="ij")
        return np.column_stack([X.ravel(), Y.ravel()])

    def weights(self) -> np.ndarray:
        """Flat trapezoid weights (1 inside, 1/2 faces, 1/4 corners)."""
        w = np.ones(self.n)
        w[0] = w[-1] = 0.5
        if self.dim == 1:
            return w
        return np.outer(w, w).ravel()


def _as_values(u) -> np.ndarray:
    return u.values if isinstance(u, Field) else np.asarray(u, dtype=float)


@dataclass(frozen=True)
class Field:
    """A real function sampled on a grid; values are defensively frozen."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float, copy=True)
        if vals.shape != (self.grid.size,):
            raise GridMismatchError(
                f"field has {vals.shape} values, grid expects ({self.grid.size},)"
            )
        if not np.all(np.isfinite(vals)):
            raise MutselError("field contains NaN or Inf")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, grid: Grid, f) -> "Field":
        pts = grid.points()
        if grid.dim == 1:
            return cls(grid, np.asarray(f(pts), dtype=float))
        return cls(grid, np.asarray(f(pts[:, 0], pts[:, 1]), dtype=float))

    @classmethod
    def constant(cls, grid: Grid, c: float) -> "Field":
        return cls(grid, np.full(grid.size, float(c)))

    def with_values(self, values) -> "Field":
        return Field(self.grid, values)

    def reshaped(self) -> np.ndarray:
        """dim=2 view as an (n, n) array; dim=1 returns the flat values."""
        if self.grid.dim == 1:
            return self.values
        return self.values.reshape(self.grid.n, self.grid.n)


def check_same_grid(f: Field, g: Field) -> Grid:
    if f.grid != g.grid:
        raise GridMismatchError(
            f"grids differ: {f.grid} vs {g.grid}"
        )
    return f.grid


def inner_product(f: Field, g: Field) -> float:
    """Trapezoid approximation of the L2 pairing of two sampled fields."""
    grid = check_same_grid(f, g)
    w = grid.weights()
    return float(grid.cell * np.sum(w * f.values * g.values))


def mass(u: Field) -> float:
    """Trapezoid approximation of the integral of u."""
    w = u.grid.weights()
    return float(u.grid.cell * np.sum(w * u.values))


def norm(u: Field, kind: str = "L2") -> float:
    """Discrete norm of a field: trapezoid "L1"/"L2" or nodewise "sup"."""
    w = u.grid.weights()
    v = u.values
    if kind == "L2":
        return float(np.sqrt(max(u.grid.cell * np.sum(w * v * v), 0.0)))
    if kind == "L1":
        return float(u.grid.cell * np.sum(w * np.abs(v)))
    if kind == "sup":
        return float(np.max(np.abs(v))) if v.size else 0.0
    raise MutselError(f"unknown norm kind {kind!r}")


def normalized(u: Field, kind: str = "L2") -> Field:
    nv = norm(u, kind)
    if nv == 0.0:
        raise MutselError("cannot normalize the zero field")
    return u.with_values(u.values / nv)


def field_to_csv(u: Field, path) -> None:
    """Write one node per row, header ``x[,y],value``, 17 significant digits."""
    pts = u.grid.points()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if u.grid.dim == 1:
            writer.writerow(["x", "value"])
            for x, v in zip(pts, u.values):
                writer.writerow([f"{x:.17g}", f"{v:.17g}"])
        else:
            writer.writerow(["x", "y", "value"])
            for (x, y), v in zip(pts, u.values):
                writer.writerow([f"{x:.17g}", f"{y:.17g}", f"{v:.17g}"])


def field_from_csv(grid: Grid, path) -> Field:
    """Read a field written by field_to_csv back onto the given grid."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if len(header) != grid.dim + 1:
        raise GridMismatchError(
            f"csv has {len(header) - 1} coordinate columns, grid dim is {grid.dim}"
        )
    if len(body) != grid.size:
        raise GridMismatchError(
            f"csv has {len(body)} rows, grid expects {grid.size}"
        )
    vals = np.array([float(r[-1]) for r in body])
    pts = grid.points()
    coords = np.array([[float(c) for c in r[:-1]] for r in body])
    if grid.dim == 1:
        coords = coords.ravel()
    if not np.allclose(coords, pts, rtol=0, atol=1e-12 * max(1.0, grid.radius)):
        raise GridMismatchError("csv node coordinates do not match the grid")
    return Field(grid, vals)
