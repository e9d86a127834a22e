"""Mutation kernels, fitness potentials, and validated problem assembly.

A problem is the triple (J, sigma, W) on a truncated grid: J a unit-mass
mutation kernel scaled to K = sigma^2 J, W a nonnegative confining potential.
Built-in shapes carry closed forms (values, reciprocal antiderivatives, tail
integrals, superlevel sets) that the criteria and gap modules consume; table
data falls back to linear interpolation and numeric quadrature.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigError, MutselError
from .grid import Field, Grid
from .quadrature import quad_adaptive

KERNEL_SHAPES = ("box", "gaussian", "table")
POTENTIAL_SHAPES = ("power", "sqrt", "double_well", "table")

_MASS_TOL = 1e-10
_EVEN_TOL = 1e-12


def load_table_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Two-column CSV (abscissa, value), header row optional."""
    xs, vs = [], []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                x, v = float(row[0]), float(row[1])
            except ValueError:
                if not xs:
                    continue  # header row
                raise ConfigError(f"{path}: bad table row {row!r}")
            xs.append(x)
            vs.append(v)
    if len(xs) < 2:
        raise ConfigError(f"{path}: need at least 2 table rows")
    x = np.asarray(xs, dtype=float)
    v = np.asarray(vs, dtype=float)
    if np.any(np.diff(x) <= 0):
        raise ConfigError(f"{path}: table abscissae must be strictly increasing")
    return x, v


@dataclass(frozen=True)
class Kernel:
    """Unit-mass mutation density J with intensity sigma (K = sigma^2 J).

    box: height 1/(2a) on [center-a, center+a], edge samples halved.
    gaussian: normal density with std half_width, mean center.
    table: linear interpolant of (table_x, table_j), normalized; positivity
    near the origin must be declared through r0.
    """

    shape: str
    sigma: float
    half_width: float = 1.0
    center: float = 0.0
    table_x: np.ndarray | None = None
    table_j: np.ndarray | None = None
    r0: float | None = None

    def __post_init__(self):
        if self.shape not in KERNEL_SHAPES:
            raise ConfigError(f"unknown kernel shape {self.shape!r}")
        if not self.sigma > 0:
            raise ConfigError(f"sigma must be positive, got {self.sigma}")
        if self.shape in ("box", "gaussian") and not self.half_width > 0:
            raise ConfigError("kernel width must be positive")
        if self.shape == "table":
            if self.table_x is None or self.table_j is None:
                raise ConfigError("table kernel needs sampled (x, j) data")
            if np.any(self.table_j < 0):
                raise ConfigError("kernel table has negative values")

    @property
    def sigma2(self) -> float:
        return self.sigma**2

    @cached_property
    def even(self) -> bool:
        if self.shape in ("box", "gaussian"):
            return self.center == 0.0
        return self.symmetry_defect() <= _EVEN_TOL

    @property
    def support_half_width(self) -> float:
        """Half-width of the smallest origin-centered interval holding supp J."""
        if self.shape == "box":
            return self.half_width + abs(self.center)
        if self.shape == "table":
            return float(max(abs(self.table_x[0]), abs(self.table_x[-1])))
        return math.inf

    def evaluate(self, z) -> np.ndarray:
        """1d profile J(z); product across axes gives the dim=2 kernel."""
        z = np.asarray(z, dtype=float)
        if self.shape == "box":
            a, c = self.half_width, self.center
            height = 1.0 / (2.0 * a)
            d = np.abs(z - c)
            edge_tol = 1e-12 * max(1.0, a)
            out = np.where(d < a - edge_tol, height, 0.0)
            out = np.where(np.abs(d - a) <= edge_tol, 0.5 * height, out)
            return out
        if self.shape == "gaussian":
            s, c = self.half_width, self.center
            return np.exp(-0.5 * ((z - c) / s) ** 2) / (s * math.sqrt(2.0 * math.pi))
        return np.interp(z, self.table_x, self.table_j, left=0.0, right=0.0)

    def evaluate_nd(self, dx, dy=None) -> np.ndarray:
        if dy is None:
            return self.evaluate(dx)
        return self.evaluate(dx) * self.evaluate(dy)

    def mass(self) -> float:
        """Analytic unit mass for built-ins; quadrature for tables."""
        if self.shape == "box":
            return 1.0
        if self.shape == "gaussian":
            return 1.0
        x0, x1 = float(self.table_x[0]), float(self.table_x[-1])
        return quad_adaptive(self.evaluate, x0, x1,
                             singular_points=list(self.table_x), tol=1e-12)

    def l2_norm(self, dim: int = 1) -> float:
        """||K||_{L2} = sigma^2 ||J||_{L2} with the dim=2 product structure."""
        if self.shape == "box":
            nj = (2.0 * self.half_width) ** -0.5
        elif self.shape == "gaussian":
            nj = (2.0 * self.half_width * math.sqrt(math.pi)) ** -0.5
        else:
            x0, x1 = float(self.table_x[0]), float(self.table_x[-1])
            sq = quad_adaptive(lambda z: self.evaluate(z) ** 2, x0, x1,
                               singular_points=list(self.table_x), tol=1e-12)
            nj = math.sqrt(max(sq, 0.0))
        return self.sigma2 * nj**dim

    def window(self, x: float) -> tuple[float, float, float] | None:
        """Support of y -> J(x - y) as (lo, hi, height) for box kernels."""
        if self.shape != "box":
            return None
        a, c = self.half_width, self.center
        return (x - c - a, x - c + a, 1.0 / (2.0 * a))

    def symmetry_defect(self, probes: int = 2001) -> float:
        half = self.support_half_width
        if not math.isfinite(half):
            half = 8.0 * self.half_width + abs(self.center)
        z = np.linspace(0.0, half, probes)
        return float(np.max(np.abs(self.evaluate(z) - self.evaluate(-z))))

    def positivity_radius(self) -> float | None:
        """Largest r with J > 0 a.e. on B(0, r), or None when there is none."""
        if self.shape == "box":
            r = self.half_width - abs(self.center)
            return r if r > 0 else None
        if self.shape == "gaussian":
            return math.inf
        if self.r0 is None:
            return None
        z = np.linspace(-self.r0, self.r0, 4001)
        return self.r0 if float(np.min(self.evaluate(z))) > 0.0 else None


def make_kernel(shape: str, sigma: float, half_width: float | None = None,
                center: float = 0.0, table: tuple[np.ndarray, np.ndarray] | None = None,
                r0: float | None = None) -> Kernel:
    """Build a unit-mass kernel; table data is renormalized (zero mass rejected)."""
    if shape in ("box", "gaussian"):
        hw = 1.0 if half_width is None else float(half_width)
        return Kernel(shape=shape, sigma=float(sigma), half_width=hw,
                      center=float(center))
    if shape == "table":
        if table is None:
            raise ConfigError("table kernel needs (x, j) samples")
        x, j = (np.asarray(a, dtype=float) for a in table)
        if np.any(j < 0):
            raise ConfigError("kernel table has negative values")
        m = float(np.trapezoid(j, x))
        if not (math.isfinite(m) and m > 0):
            raise ConfigError(f"kernel table mass {m} is not normalizable")
        return Kernel(shape="table", sigma=float(sigma), half_width=0.0,
                      center=0.0, table_x=x, table_j=j / m, r0=r0)
    raise ConfigError(f"unknown kernel shape {shape!r}")


@dataclass(frozen=True)
class Potential:
    """Nonnegative fitness cost W, radial in dim=2.

    power: |x|^m + shift (sqrt is the m=1/2 case, kept as its own label).
    double_well: x^4 - x^2 + shift, minimum shift - 1/4 at |x| = 1/sqrt(2).
    table: linear interpolant, clamped to its end values outside the range.
    """

    shape: str
    m: float = 2.0
    shift: float = 0.0
    table_x: np.ndarray | None = None
    table_w: np.ndarray | None = None

    def __post_init__(self):
        if self.shape not in POTENTIAL_SHAPES:
            raise ConfigError(f"unknown potential shape {self.shape!r}")
        if self.shape == "power" and not self.m > 0:
            raise ConfigError(f"power exponent must be positive, got {self.m}")
        if self.shape == "table" and (self.table_x is None or self.table_w is None):
            raise ConfigError("table potential needs sampled (x, w) data")

    @property
    def exponent(self) -> float:
        return 0.5 if self.shape == "sqrt" else self.m

    def value(self, x) -> np.ndarray:
        """W at radial coordinate x (scalar or array); accepts signed input."""
        x = np.asarray(x, dtype=float)
        r = np.abs(x)
        if self.shape in ("power", "sqrt"):
            return r**self.exponent + self.shift
        if self.shape == "double_well":
            return r**4 - r**2 + self.shift
        return np.interp(x, self.table_x, self.table_w)

    def sample(self, grid: Grid) -> Field:
        pts = grid.points()
        if grid.dim == 1:
            return Field(grid, self.value(pts))
        r = np.hypot(pts[:, 0], pts[:, 1])
        return Field(grid, self.value(r))

    def min_value(self) -> float:
        if self.shape in ("power", "sqrt"):
            return self.shift
        if self.shape == "double_well":
            return self.shift - 0.25
        return float(np.min(self.table_w))

    def zeros(self) -> tuple[float, ...]:
        """Radial locations where W = 0 (quadrature split points)."""
        if self.shape in ("power", "sqrt"):
            return (0.0,) if self.shift == 0.0 else ()
        if self.shape == "double_well":
            disc = 1.0 - 4.0 * self.shift
            if disc < 0:
                return ()
            roots = []
            for q in ((1.0 - math.sqrt(disc)) / 2.0, (1.0 + math.sqrt(disc)) / 2.0):
                if q >= 0:
                    roots.append(math.sqrt(q))
            zs = sorted({round(r, 15) for r in roots})
            return tuple(-z for z in reversed(zs) if z > 0) + tuple(zs)
        return tuple(float(x) for x, w in zip(self.table_x, self.table_w) if w == 0.0)

    def reciprocal_integrable_at_zeros(self) -> bool:
        """Whether 1/W is locally integrable across each zero of W."""
        if not self.zeros():
            return True
        if self.shape in ("power", "sqrt"):
            return self.exponent < 1.0
        return False  # quartic double-well contact and table zeros are too flat

    def reciprocal_antiderivative(self):
        """Closed-form antiderivative of 1/W on each component of {W > 0}.

        Returns a vectorized callable or None when only numeric integration
        is available (tables, shifted shapes without a closed form).
        """
        if self.shape in ("power", "sqrt") and self.shift == 0.0:
            p = self.exponent
            if p == 1.0:
                return lambda y: np.sign(y) * np.log(np.abs(y))
            return lambda y: np.sign(y) * np.abs(y) ** (1.0 - p) / (1.0 - p)
        if self.shape == "double_well" and self.shift == 0.25:
            a = math.sqrt(0.5)

            def anti(y):
                y = np.asarray(y, dtype=float)
                with np.errstate(divide="ignore", invalid="ignore"):
                    return (-y / (2.0 * a**2 * (y * y - a**2))
                            - np.log(np.abs((y - a) / (y + a))) / (4.0 * a**3))

            return anti
        return None

    def tail_reciprocal(self, r: float, dim: int = 1) -> float:
        """Integral of 1/W over {|x| > r}; inf when divergent, 0 for tables.

        Table potentials carry no information past their range, so the tail
        is dropped (the caller flags the report).
        """
        if not r > 0:
            raise MutselError(f"tail radius must be positive, got {r}")
        if self.shape == "table":
            return 0.0
        if any(abs(z) >= r for z in self.zeros()):
            return math.inf  # 1/W blows up non-integrably inside the tail
        if self.shape in ("power", "sqrt") and self.shift == 0.0:
            p = self.exponent
            if dim == 1:
                return 2.0 * r ** (1.0 - p) / (p - 1.0) if p > 1.0 else math.inf
            return 2.0 * math.pi * r ** (2.0 - p) / (p - 2.0) if p > 2.0 else math.inf
        if self.shape == "double_well" and self.shift == 0.25:
            a = math.sqrt(0.5)
            if dim == 1:
                one_sided = (r / (2.0 * a**2 * (r * r - a**2))
                             + math.log((r - a) / (r + a)) / (4.0 * a**3))
                return 2.0 * one_sided
            return math.pi / (r * r - a**2)
        # shifted variants: numeric body, then a closed-form overestimate of
        # the far remainder (1/W <= the dominating unshifted reciprocal)
        if dim != 1:
            raise MutselError("tail integral for shifted potentials is 1d only")
        if self.shape in ("power", "sqrt") and self.exponent <= 1.0:
            return math.inf
        far = max(4.0 * r, 100.0)
        body = quad_adaptive(lambda y: 1.0 / self.value(y), r, far, tol=1e-10)
        if self.shape == "double_well":
            # W = (x^2 - 1/2)^2 + (shift - 1/4) >= (x^2 - 1/2)^2
            rest = Potential("double_well", shift=0.25).tail_reciprocal(far, dim=1) / 2.0
        else:
            p = self.exponent
            rest = far ** (1.0 - p) / (p - 1.0)
        return 2.0 * (body + rest)

    def region_at_least(self, eps: float, lo: float, hi: float) -> list[tuple[float, float]]:
        """Components of {W >= eps} within [lo, hi], endpoints exact.

        eps = 0 returns [lo, hi] split at the zeros of W, so downstream
        quadrature treats each zero as a component endpoint.
        """
        if hi <= lo:
            return []
        if eps < 0:
            raise MutselError(f"eps must be >= 0, got {eps}")
        if eps == 0.0:
            cuts = [z for z in self.zeros() if lo < z < hi]
            edges = [lo] + cuts + [hi]
            return [(a, b) for a, b in zip(edges[:-1], edges[1:]) if b > a]
        if self.shape in ("power", "sqrt"):
            if eps <= self.shift:
                return [(lo, hi)]
            c = (eps - self.shift) ** (1.0 / self.exponent)
            return _clip_segments([(-math.inf, -c), (c, math.inf)], lo, hi)
        if self.shape == "double_well":
            # q = x^2: q^2 - q + (shift - eps) >= 0
            disc = 1.0 - 4.0 * (self.shift - eps)
            if disc <= 0:
                return [(lo, hi)]
            qm = (1.0 - math.sqrt(disc)) / 2.0
            qp = (1.0 + math.sqrt(disc)) / 2.0
            segs = [(-math.inf, -math.sqrt(qp)), (math.sqrt(qp), math.inf)]
            if qm > 0:
                segs.insert(1, (-math.sqrt(qm), math.sqrt(qm)))
            return _clip_segments(segs, lo, hi)
        return self._table_region(eps, lo, hi)

    def _table_region(self, eps, lo, hi):
        xs = self.table_x
        ws = self.table_w
        segs = []
        cur = None
        # clamped extrapolation keeps end segments flat
        knots = np.concatenate(([min(lo, xs[0])], xs, [max(hi, xs[-1])]))
        vals = np.concatenate(([ws[0]], ws, [ws[-1]]))
        for x0, x1, w0, w1 in zip(knots[:-1], knots[1:], vals[:-1], vals[1:]):
            if x1 <= x0:
                continue
            if w0 >= eps and w1 >= eps:
                piece = (x0, x1)
            elif w0 < eps and w1 < eps:
                piece = None
            else:
                xc = x0 + (eps - w0) / (w1 - w0) * (x1 - x0)
                piece = (x0, xc) if w0 >= eps else (xc, x1)
            if piece is None:
                if cur is not None:
                    segs.append(cur)
                    cur = None
                continue
            if cur is not None and abs(cur[1] - piece[0]) < 1e-15:
                cur = (cur[0], piece[1])
            else:
                if cur is not None:
                    segs.append(cur)
                cur = piece
        if cur is not None:
            segs.append(cur)
        return _clip_segments(segs, lo, hi)


def _clip_segments(segs, lo, hi):
    out = []
    for a, b in segs:
        a2, b2 = max(a, lo), min(b, hi)
        if b2 > a2:
            out.append((a2, b2))
    return out


def make_potential(shape: str, m: float | None = None, shift: float | None = None,
                   table: tuple[np.ndarray, np.ndarray] | None = None) -> Potential:
    """Build a potential; double_well defaults to shift = 1/4 so min W = 0."""
    if shape == "power":
        if m is None:
            raise ConfigError("power potential needs an exponent m")
        return Potential("power", m=float(m), shift=float(shift or 0.0))
    if shape == "sqrt":
        return Potential("sqrt", m=0.5, shift=float(shift or 0.0))
    if shape == "double_well":
        return Potential("double_well", shift=0.25 if shift is None else float(shift))
    if shape == "table":
        if table is None:
            raise ConfigError("table potential needs (x, w) samples")
        x, w = (np.asarray(a, dtype=float) for a in table)
        return Potential("table", table_x=x, table_w=w)
    raise ConfigError(f"unknown potential shape {shape!r}")


@dataclass(frozen=True)
class Problem:
    """Validated (kernel, potential, grid) triple."""

    kernel: Kernel
    potential: Potential
    grid: Grid

    @cached_property
    def w_field(self) -> Field:
        return self.potential.sample(self.grid)

    @property
    def sigma2(self) -> float:
        return self.kernel.sigma2

    @property
    def truncation_ok(self) -> bool:
        return self.kernel.support_half_width <= 2.0 * self.grid.radius


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    measured: float
    detail: str
    severity: str = "required"  # "required" | "warning" | "info"


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[CheckResult, ...]
    even: bool

    @property
    def all_pass(self) -> bool:
        return all(c.passed for c in self.checks if c.severity == "required")

    @property
    def groundstate_mode_ok(self) -> bool:
        return all(c.passed for c in self.checks if c.name.startswith("groundstate"))

    def find(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def lines(self) -> list[str]:
        out = []
        for c in self.checks:
            flag = "pass" if c.passed else "FAIL"
            out.append(f"{c.name}: {flag} (measured {c.measured:.6g}) {c.detail}")
        return out


def validate(problem: Problem) -> ValidationReport:
    """Report-style assumption checks; nothing is thrown on failure."""
    k, pot, grid = problem.kernel, problem.potential, problem.grid
    checks = []

    half = k.support_half_width
    probe_half = half if math.isfinite(half) else 8.0 * k.half_width + abs(k.center)
    zs = np.linspace(-probe_half, probe_half, 4001)
    jmin = float(np.min(k.evaluate(zs)))
    checks.append(CheckResult("kernel_nonnegative", jmin >= 0.0, jmin,
                              "min of J over its support"))

    mass_defect = abs(k.mass() - 1.0)
    checks.append(CheckResult("kernel_unit_mass", mass_defect <= _MASS_TOL,
                              mass_defect, "|integral of J - 1|"))

    r0 = k.positivity_radius()
    if r0 is None:
        detail = ("no declared r0" if k.shape == "table"
                  else "origin is not interior to the support")
        checks.append(CheckResult("kernel_positive_near_origin", False, 0.0, detail))
    else:
        rr = min(r0, probe_half) if math.isfinite(r0) else probe_half
        ball_min = float(np.min(k.evaluate(np.linspace(-0.999 * rr, 0.999 * rr, 2001))))
        checks.append(CheckResult("kernel_positive_near_origin", ball_min > 0.0,
                                  ball_min, f"min of J over the ball of radius {rr:.4g}"))

    sym = k.symmetry_defect()
    if k.even:
        checks.append(CheckResult("kernel_evenness", sym <= _EVEN_TOL, sym,
                                  "max |J(z) - J(-z)|"))
    else:
        checks.append(CheckResult("kernel_evenness", True, sym,
                                  "kernel declared non-even; adjoint route applies",
                                  severity="info"))

    wvals = problem.w_field.values
    wmin = float(np.min(wvals))
    checks.append(CheckResult("potential_nonnegative", wmin >= 0.0, wmin,
                              "min of W over grid nodes"))

    if grid.dim == 1:
        boundary = float(min(wvals[0], wvals[-1]))
        inner = grid.axis()
        inner_max = float(np.max(wvals[np.abs(inner) <= grid.radius / 2.0]))
    else:
        sq = problem.w_field.reshaped()
        boundary = float(min(sq[0, :].min(), sq[-1, :].min(),
                             sq[:, 0].min(), sq[:, -1].min()))
        ax = grid.axis()
        keep = np.abs(ax) <= grid.radius / 2.0
        inner_max = float(np.max(sq[np.ix_(keep, keep)]))
    checks.append(CheckResult("potential_confining", boundary >= inner_max,
                              boundary - inner_max,
                              "W(boundary) minus max of W on the inner half"))

    w0 = float(pot.value(0.0))
    checks.append(CheckResult("groundstate_w_vanishes_at_origin", w0 == 0.0, w0,
                              "W(0)", severity="info"))
    pts = grid.points()
    r = np.abs(pts) if grid.dim == 1 else np.hypot(pts[:, 0], pts[:, 1])
    away = wvals[r > grid.h / 2.0]
    away_min = float(np.min(away)) if away.size else math.nan
    checks.append(CheckResult("groundstate_w_positive_away", away_min > 0.0,
                              away_min, "min of W off the origin", severity="info"))

    checks.append(CheckResult("kernel_support_within_domain", problem.truncation_ok,
                              half, "support half-width vs 2R",
                              severity="warning"))

    return ValidationReport(checks=tuple(checks), even=k.even)
