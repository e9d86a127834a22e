"""Run configuration: strict key/value files and builders for runs.

Format: INI-like sections of `key = value` lines. Full-line comments start
with `#` or `;`. Unknown sections or keys are fatal and name the line, so a
typo can never silently fall back to a default and corrupt a reproduction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .grid import Field, Grid, field_from_csv, mass
from .model import (
    KERNEL_SHAPES,
    POTENTIAL_SHAPES,
    Problem,
    load_table_csv,
    make_kernel,
    make_potential,
)

LINEAR_TASKS = ("validate", "eigen", "criteria", "gap", "evolve-linear",
                "evolve-nonlinear")
REPRODUCE_TASKS = ("reproduce-example1", "reproduce-example2")
TASKS = LINEAR_TASKS + REPRODUCE_TASKS

_EIGEN_METHODS = ("variational", "inverse_power")
_NORMS = ("L1", "L2", "sup")
_LIN_SCHEMES = ("exp_euler", "strang", "dense_expm")
_NONLIN_SCHEMES = ("normalized_linear", "direct_ode")

# section -> key -> (kind, default); kind in {float, int, str, bool, choice:*}
_SCHEMA = {
    "kernel": {
        "shape": ("choice:" + ",".join(KERNEL_SHAPES), None),
        "sigma2": ("float", None),
        "half_width": ("float", 1.0),
        "width": ("float", None),
        "center": ("float", 0.0),
        "table": ("str", None),
        "positivity_radius": ("float", None),
    },
    "potential": {
        "shape": ("choice:" + ",".join(POTENTIAL_SHAPES), None),
        "m": ("float", None),
        "shift": ("float", None),
        "table": ("str", None),
    },
    "grid": {
        "dim": ("int", 1),
        "n": ("int", 256),
        "radius": ("float", None),
    },
    "eigen": {
        "method": ("choice:" + ",".join(_EIGEN_METHODS), "variational"),
        "tol": ("float", 1e-8),
        "maxiter": ("int", 5000),
    },
    "criteria": {
        "radius": ("float", 1.0),
        "eps": ("float", 1e-6),
        "tol": ("float", 1e-8),
        "radii": ("str", None),
    },
    "gap": {
        "omega_radius": ("float", 1.0),
        "tol": ("float", 1e-10),
    },
    "dynamics": {
        "T": ("float", 10.0),
        "dt": ("float", None),
        "scheme": ("str", None),
        "u0": ("str", "gaussian:0:0.15"),
        "distance_norm": ("choice:" + ",".join(_NORMS), None),
        "snapshot_every": ("int", 0),
        "burn_in": ("float", None),
    },
}

_REQUIRED = {("kernel", "shape"), ("kernel", "sigma2"), ("potential", "shape")}


def _coerce(section: str, key: str, kind: str, raw: str, line: int):
    where = f"line {line}: [{section}] {key}"
    if kind == "float":
        try:
            v = float(raw)
        except ValueError:
            raise ConfigError(f"{where}: expected a number, got {raw!r}") from None
        if not math.isfinite(v):
            raise ConfigError(f"{where}: value must be finite")
        return v
    if kind == "int":
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{where}: expected an integer, got {raw!r}") from None
    if kind == "bool":
        low = raw.lower()
        if low in ("true", "yes", "1"):
            return True
        if low in ("false", "no", "0"):
            return False
        raise ConfigError(f"{where}: expected true/false, got {raw!r}")
    if kind.startswith("choice:"):
        options = kind.split(":", 1)[1].split(",")
        if raw not in options:
            raise ConfigError(
                f"{where}: expected one of {options}, got {raw!r}"
            )
        return raw
    return raw


@dataclass
class RunConfig:
    """Parsed, type-checked configuration with resolved defaults."""

    values: dict = field(default_factory=dict)  # (section, key) -> value
    path: str = "<memory>"

    def get(self, section: str, key: str):
        return self.values.get((section, key), _SCHEMA[section][key][1])

    def given(self, section: str, key: str) -> bool:
        return (section, key) in self.values

    # problem construction ------------------------------------------------

    def build_kernel(self):
        shape = self.get("kernel", "shape")
        if shape is None:
            raise ConfigError(f"{self.path}: [kernel] shape is required")
        s2 = self.get("kernel", "sigma2")
        if s2 is None:
            raise ConfigError(f"{self.path}: [kernel] sigma2 is required")
        if not s2 > 0:
            raise ConfigError(f"{self.path}: [kernel] sigma2 must be positive")
        sigma = math.sqrt(s2)
        if shape == "box":
            return make_kernel("box", sigma,
                               half_width=self.get("kernel", "half_width"),
                               center=self.get("kernel", "center"))
        if shape == "gaussian":
            width = self.get("kernel", "width")
            if width is None:
                raise ConfigError(
                    f"{self.path}: gaussian kernel needs [kernel] width"
                )
            return make_kernel("gaussian", sigma, half_width=width,
                               center=self.get("kernel", "center"))
        path = self.get("kernel", "table")
        if path is None:
            raise ConfigError(f"{self.path}: table kernel needs [kernel] table")
        return make_kernel("table", sigma, table=load_table_csv(path),
                           r0=self.get("kernel", "positivity_radius"))

    def build_potential(self):
        shape = self.get("potential", "shape")
        if shape is None:
            raise ConfigError(f"{self.path}: [potential] shape is required")
        if shape == "table":
            path = self.get("potential", "table")
            if path is None:
                raise ConfigError(
                    f"{self.path}: table potential needs [potential] table"
                )
            return make_potential("table", table=load_table_csv(path))
        return make_potential(shape, m=self.get("potential", "m"),
                              shift=self.get("potential", "shift"))

    def build_grid(self, kernel=None, potential=None) -> Grid:
        kernel = kernel if kernel is not None else self.build_kernel()
        potential = potential if potential is not None else self.build_potential()
        radius = self.get("grid", "radius")
        if radius is None:
            radius = default_radius(kernel, potential)
        return Grid(dim=self.get("grid", "dim"), radius=radius,
                    n=self.get("grid", "n"))

    def build_problem(self) -> Problem:
        kernel = self.build_kernel()
        potential = self.build_potential()
        grid = self.build_grid(kernel, potential)
        return Problem(kernel=kernel, potential=potential, grid=grid)

    # task parameters ------------------------------------------------------

    def radii_sweep(self) -> np.ndarray | None:
        raw = self.get("criteria", "radii")
        if raw is None:
            return None
        parts = raw.split(":")
        if len(parts) != 3:
            raise ConfigError(
                f"{self.path}: [criteria] radii must be start:stop:count,"
                f" got {raw!r}"
            )
        try:
            lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise ConfigError(
                f"{self.path}: bad [criteria] radii value {raw!r}"
            ) from None
        if not (0 < lo < hi and count >= 2):
            raise ConfigError(
                f"{self.path}: [criteria] radii needs 0 < start < stop, count >= 2"
            )
        return np.linspace(lo, hi, count)

    def scheme_for(self, task: str) -> str:
        scheme = self.get("dynamics", "scheme")
        if task == "evolve-linear":
            scheme = scheme or "strang"
            if scheme not in _LIN_SCHEMES:
                raise ConfigError(
                    f"{self.path}: linear schemes are {_LIN_SCHEMES}, got {scheme!r}"
                )
        else:
            scheme = scheme or "normalized_linear"
            if scheme not in _NONLIN_SCHEMES:
                raise ConfigError(
                    f"{self.path}: nonlinear schemes are {_NONLIN_SCHEMES},"
                    f" got {scheme!r}"
                )
        return scheme

    def norm_for(self, task: str) -> str:
        return self.get("dynamics", "distance_norm") or (
            "L2" if task == "evolve-linear" else "L1"
        )

    # reporting -------------------------------------------------------------

    def echo_lines(self, task: str) -> list[str]:
        """Effective configuration, defaults resolved, in schema order."""
        out = [f"task = {task}"]
        for section in _SCHEMA:
            for key in _SCHEMA[section]:
                given = self.given(section, key)
                val = self.get(section, key)
                if val is None and not given:
                    continue
                if isinstance(val, float):
                    sval = f"{val:.17g}"
                elif isinstance(val, bool):
                    sval = "true" if val else "false"
                else:
                    sval = str(val)
                mark = "" if given else "  (default)"
                out.append(f"{section}.{key} = {sval}{mark}")
        return out


def default_radius(kernel, potential) -> float:
    """Smallest R with W(R) >= 50 sigma^2, clamped to at least the kernel
    support half-width and at least 1; table potentials use their own range."""
    if potential.shape == "table":
        r = float(max(abs(potential.table_x[0]), abs(potential.table_x[-1])))
        return max(r, 1.0)
    target = 50.0 * kernel.sigma2
    lo = 1.0
    for z in potential.zeros():
        lo = max(lo, abs(z) + 1e-6)
    hw = kernel.support_half_width
    if math.isfinite(hw):
        lo = max(lo, hw)
    r = lo
    for _ in range(200):
        if float(potential.value(np.array([r]))[0]) >= target:
            break
        r *= 1.5
    else:
        raise ConfigError("potential never reaches 50 sigma^2; set grid radius")
    hi = r
    lo_b = lo
    for _ in range(80):
        mid = 0.5 * (lo_b + hi)
        if float(potential.value(np.array([mid]))[0]) >= target:
            hi = mid
        else:
            lo_b = mid
    return max(hi, lo)


def parse_config(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config_lines(lines, path)


def parse_config_lines(lines, path: str = "<memory>") -> RunConfig:
    values: dict = {}
    section = None
    for lineno, raw in enumerate(lines, 1):
        text = raw.strip()
        if not text or text.startswith("#") or text.startswith(";"):
            continue
        if text.startswith("[") and text.endswith("]"):
            section = text[1:-1].strip()
            if section not in _SCHEMA:
                raise ConfigError(
                    f"{path} line {lineno}: unknown section [{section}];"
                    f" known: {sorted(_SCHEMA)}"
                )
            continue
        if "=" not in text:
            raise ConfigError(
                f"{path} line {lineno}: expected `key = value`, got {text!r}"
            )
        if section is None:
            raise ConfigError(
                f"{path} line {lineno}: key before any [section] header"
            )
        key, _, rawval = text.partition("=")
        key = key.strip()
        rawval = rawval.strip()
        if key not in _SCHEMA[section]:
            raise ConfigError(
                f"{path} line {lineno}: unknown key {key!r} in [{section}];"
                f" known: {sorted(_SCHEMA[section])}"
            )
        if (section, key) in values:
            raise ConfigError(
                f"{path} line {lineno}: duplicate key {key!r} in [{section}]"
            )
        kind = _SCHEMA[section][key][0]
        values[(section, key)] = _coerce(section, key, kind, rawval, lineno)
    return RunConfig(values=values, path=path)


def build_u0(form: str, grid: Grid, phi: Field | None = None) -> Field:
    """Initial datum from its config string, normalized to unit mass.

    Forms: gaussian:center:width | uniform | bimodal:c1:c2:width | phi |
    table:path.
    """
    parts = form.split(":")
    name = parts[0]

    def bump(center: float, width: float) -> np.ndarray:
        pts = grid.points()
        if grid.dim == 1:
            r2 = (pts - center) ** 2
        else:
            r2 = (pts[:, 0] - center) ** 2 + (pts[:, 1] - center) ** 2
        return np.exp(-0.5 * r2 / width**2)

    if name == "gaussian":
        if len(parts) != 3:
            raise ConfigError(f"u0 gaussian form is gaussian:center:width, got {form!r}")
        c, w = _floats(parts[1:], form)
        vals = bump(c, w)
    elif name == "uniform":
        vals = np.ones(grid.size)
    elif name == "bimodal":
        if len(parts) != 4:
            raise ConfigError(f"u0 bimodal form is bimodal:c1:c2:width, got {form!r}")
        c1, c2, w = _floats(parts[1:], form)
        vals = bump(c1, w) + bump(c2, w)
    elif name == "phi":
        if phi is None:
            raise ConfigError("u0 = phi needs a computed eigenpair")
        vals = phi.values.copy()
    elif name == "table":
        if len(parts) != 2:
            raise ConfigError(f"u0 table form is table:path, got {form!r}")
        return _unit_mass(field_from_csv(grid, parts[1]))
    else:
        raise ConfigError(
            f"unknown u0 form {name!r}; use gaussian/uniform/bimodal/phi/table"
        )
    return _unit_mass(Field(grid, vals))


def _floats(parts, form):
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"bad number in u0 form {form!r}") from None


def _unit_mass(f: Field) -> Field:
    m = mass(f)
    if not m > 0:
        raise ConfigError("u0 has nonpositive mass on the grid")
    return Field(f.grid, f.values / m)
