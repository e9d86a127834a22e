"""Time integration of the linear flow and the replicator-mutator equation.

Linear runs integrate the unshifted generator G u = K*u - (W + sigma^2) u.
The stiff part is the diagonal (max W grows fast with the domain radius), so
the steppers integrate it exactly: exp_euler freezes the convolution over the
step (order 1), strang wraps a truncated exp(dt K*) series in two half-step
diagonal exponentials (order 2), and dense_expm applies the matrix
exponential of the assembled generator (the oracle). Distances are reported
on the shifted variable e^{lambda* t} u(t) against its projection target.

Nonlinear runs either renormalize the linear flow every step (the mass-one
representation of the solution, exact by construction) or integrate the full
right-hand side with classical RK4 including the mean-fitness term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import MutselError, PositivityError, SteppingError, ValidationFailure
from .grid import Field, inner_product, mass, norm
from .operator import DiscreteOperator

LINEAR_SCHEMES = ("exp_euler", "strang", "dense_expm")
NONLINEAR_SCHEMES = ("normalized_linear", "direct_ode")

_RK4_STABILITY = 2.7
_DIST_FLOOR = 1e-14


@dataclass
class EvolutionTrace:
    """Per-step series of a run plus optional field snapshots."""

    times: np.ndarray
    mass: np.ndarray
    mean_fitness: np.ndarray
    distance: np.ndarray
    scheme: str
    distance_norm: str
    snapshots: list = field(default_factory=list)
    snapshot_times: list = field(default_factory=list)
    lambda_star: float = 0.0
    clip_count: int = 0
    fitted_rate: float | None = None
    fit_residual: float | None = None

    def __post_init__(self):
        lens = {len(self.times), len(self.mass), len(self.mean_fitness),
                len(self.distance)}
        if len(lens) != 1:
            raise MutselError("trace series lengths disagree")
        if np.any(np.diff(self.times) <= 0):
            raise MutselError("trace times must be strictly increasing")


@dataclass(frozen=True)
class RateFit:
    rate: float
    residual: float
    points: int


def _steps(T: float, dt: float) -> list[float]:
    if not dt > 0:
        raise MutselError(f"dt must be positive, got {dt}")
    if T < dt:
        raise MutselError(f"need T >= dt, got T={T}, dt={dt}")
    n = int(math.floor(T / dt + 1e-12))
    steps = [dt] * n
    rest = T - n * dt
    if rest > 1e-12 * dt:
        steps.append(rest)
    return steps


def default_dt(op: DiscreteOperator) -> float:
    """min(0.01, 0.1 / max W): the diagonal is integrated exactly, so dt is
    limited only by splitting accuracy."""
    wmax = float(np.max(op.w_values))
    return min(0.01, 0.1 / max(wmax, 1e-12))


class _LinearStepper:
    """one_step(values, dt) for each linear scheme; plans are cached per dt."""

    def __init__(self, op: DiscreteOperator, scheme: str):
        if scheme not in LINEAR_SCHEMES:
            raise MutselError(f"unknown linear scheme {scheme!r}")
        self.op = op
        self.scheme = scheme
        self._dt = None
        self._diag = None
        self._half = None
        self._phi1 = None
        self._propagator = None

    def _plan(self, dt: float):
        if self._dt == dt:
            return
        op = self.op
        z = -(op.w_values + op.sigma2) * dt
        if self.scheme == "exp_euler":
            self._diag = np.exp(z)
            small = np.abs(z) < 1e-8
            with np.errstate(divide="ignore", invalid="ignore"):
                phi1 = np.expm1(z) / z
            self._phi1 = np.where(small, 1.0 + 0.5 * z, phi1)
        elif self.scheme == "strang":
            self._half = np.exp(0.5 * z)
        else:
            from scipy.linalg import expm

            M = op.assemble_dense()
            G = -(M + op.sigma2 * np.eye(M.shape[0]))
            self._propagator = expm(G * dt)
        self._dt = dt

    def one_step(self, vals: np.ndarray, dt: float) -> np.ndarray:
        self._plan(dt)
        op = self.op
        if self.scheme == "exp_euler":
            conv = op.convolve(Field(op.grid, vals)).values
            return self._diag * vals + dt * self._phi1 * conv
        if self.scheme == "strang":
            v = self._half * vals
            v = self._conv_exp(v, dt)
            return self._half * v
        return self._propagator @ vals

    def _conv_exp(self, vals: np.ndarray, dt: float) -> np.ndarray:
        """exp(dt K*) v by the convolution series, truncated at roundoff."""
        op = self.op
        out = vals.copy()
        term = vals
        scale = float(np.max(np.abs(vals)))
        for k in range(1, 40):
            term = (dt / k) * op.convolve(Field(op.grid, term)).values
            out += term
            if float(np.max(np.abs(term))) <= 1e-17 * max(scale, 1e-300):
                return out
        raise SteppingError(
            "convolution series did not reach roundoff; reduce dt"
        )


def _projection_target(op, u0, eigpair, weight):
    """(coefficient, target values) for the shifted-flow distance."""
    if eigpair is None:
        return None, None
    w = weight if weight is not None else eigpair.phi
    c = inner_product(w, u0)
    return c, c * eigpair.phi.values


def evolve_linear(op: DiscreteOperator, u0: Field, T: float, dt: float,
                  scheme: str = "strang", eigpair=None, weight: Field | None = None,
                  distance_norm: str = "L2",
                  snapshot_every: int = 0) -> EvolutionTrace:
    """Integrate du/dt = K*u - (W + sigma^2) u from u0 over [0, T].

    When an eigenpair is supplied the distance series is
    ||e^{lambda* t} u(t) - c phi|| with c = <weight, u0> (weight defaults to
    phi; pass the adjoint eigenvector for non-even kernels).
    """
    if u0.grid != op.grid:
        raise MutselError("u0 grid does not match the operator grid")
    stepper = _LinearStepper(op, scheme)
    steps = _steps(T, dt)
    wvals = op.w_values
    grid = op.grid
    wq = grid.cell * grid.weights()

    coeff, target = _projection_target(op, u0, eigpair, weight)
    lam_star = eigpair.lambda_star if eigpair is not None else 0.0

    times = [0.0]
    masses = [float(np.sum(wq * u0.values))]
    fitness = [float(np.sum(wq * wvals * u0.values))]
    dists = [math.nan]
    snaps, snap_ts = [], []
    vals = u0.values.copy()

    def record_distance(t, v):
        if target is None:
            return math.nan
        dev = math.exp(lam_star * t) * v - target
        return norm(Field(grid, dev), distance_norm)

    dists[0] = record_distance(0.0, vals)
    if snapshot_every > 0:
        snaps.append(Field(grid, vals))
        snap_ts.append(0.0)

    t = 0.0
    for i, h in enumerate(steps, start=1):
        vals = stepper.one_step(vals, h)
        t += h
        if not np.all(np.isfinite(vals)):
            raise SteppingError(
                f"non-finite values at step {i} (t = {t:.6g}); reduce dt",
                step=i, time=t,
            )
        times.append(t)
        masses.append(float(np.sum(wq * vals)))
        fitness.append(float(np.sum(wq * wvals * vals)))
        dists.append(record_distance(t, vals))
        if snapshot_every > 0 and (i % snapshot_every == 0 or i == len(steps)):
            snaps.append(Field(grid, vals))
            snap_ts.append(t)

    return EvolutionTrace(
        times=np.asarray(times), mass=np.asarray(masses),
        mean_fitness=np.asarray(fitness), distance=np.asarray(dists),
        scheme=scheme, distance_norm=distance_norm,
        snapshots=snaps, snapshot_times=snap_ts, lambda_star=lam_star,
    )


def evolve_nonlinear(op: DiscreteOperator, u0: Field, T: float, dt: float,
                     scheme: str = "normalized_linear", eigpair=None,
                     distance_norm: str = "L1",
                     snapshot_every: int = 0) -> EvolutionTrace:
    """Integrate the replicator-mutator equation from a probability density.

    normalized_linear: one linear step, then renormalize to unit mass (the
    normalization representation of the solution; mass is 1 identically).
    direct_ode: classical RK4 on sigma^2(J*u - u) - (W - <W,u>) u.
    """
    if scheme not in NONLINEAR_SCHEMES:
        raise MutselError(f"unknown nonlinear scheme {scheme!r}")
    if u0.grid != op.grid:
        raise MutselError("u0 grid does not match the operator grid")
    if float(np.min(u0.values)) < 0.0:
        raise ValidationFailure("nonlinear runs need u0 >= 0 at every node")
    m0 = mass(u0)
    if abs(m0 - 1.0) > 1e-10:
        raise ValidationFailure(
            f"nonlinear runs need unit mass, got <u0, 1> = {m0:.12g}"
        )

    grid = op.grid
    wvals = op.w_values
    wq = grid.cell * grid.weights()
    steps = _steps(T, dt)

    target = None
    if eigpair is not None:
        phi_mass = mass(eigpair.phi)
        target = eigpair.phi.values / phi_mass

    if scheme == "direct_ode":
        wmax = float(np.max(wvals))
        if dt * (wmax + op.sigma2) > _RK4_STABILITY:
            raise SteppingError(
                f"RK4 unstable: dt * (max W + sigma^2) = {dt * (wmax + op.sigma2):.3g}"
                f" exceeds {_RK4_STABILITY}; reduce dt below"
                f" {_RK4_STABILITY / (wmax + op.sigma2):.3g}"
            )

    clip_count = 0

    def mean_fitness_of(v: np.ndarray) -> float:
        nonlocal clip_count
        neg = v < 0.0
        if np.any(neg):
            worst = float(np.min(v))
            if worst < -1e-8:
                raise PositivityError(
                    f"nonlinear iterate dipped to {worst:.3g} (below -1e-8)"
                )
            clip_count += int(np.sum(neg))
            v = np.where(neg, 0.0, v)
        return float(np.sum(wq * wvals * v))

    def rhs(v: np.ndarray) -> np.ndarray:
        conv = op.convolve(Field(grid, v)).values
        wbar = mean_fitness_of(v)
        return conv - op.sigma2 * v - (wvals - wbar) * v

    stepper = _LinearStepper(op, "strang") if scheme == "normalized_linear" else None

    times = [0.0]
    masses = [m0]
    fitness = [float(np.sum(wq * wvals * u0.values))]
    dists = []
    snaps, snap_ts = [], []
    vals = u0.values.copy()

    def dist_of(v):
        if target is None:
            return math.nan
        return norm(Field(grid, v - target), distance_norm)

    dists.append(dist_of(vals))
    if snapshot_every > 0:
        snaps.append(Field(grid, vals))
        snap_ts.append(0.0)

    t = 0.0
    for i, h in enumerate(steps, start=1):
        if scheme == "normalized_linear":
            vals = stepper.one_step(vals, h)
            m = float(np.sum(wq * vals))
            if not (math.isfinite(m) and m > 1e-280):
                raise SteppingError(
                    f"linear-flow mass underflowed at step {i}; raise R or reduce T",
                    step=i, time=t + h,
                )
            vals = vals / m
        else:
            k1 = rhs(vals)
            k2 = rhs(vals + 0.5 * h * k1)
            k3 = rhs(vals + 0.5 * h * k2)
            k4 = rhs(vals + h * k3)
            vals = vals + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += h
        if not np.all(np.isfinite(vals)):
            raise SteppingError(
                f"non-finite values at step {i} (t = {t:.6g}); reduce dt",
                step=i, time=t,
            )
        times.append(t)
        masses.append(float(np.sum(wq * vals)))
        fitness.append(float(np.sum(wq * wvals * vals)))
        dists.append(dist_of(vals))
        if snapshot_every > 0 and (i % snapshot_every == 0 or i == len(steps)):
            snaps.append(Field(grid, vals))
            snap_ts.append(t)

    return EvolutionTrace(
        times=np.asarray(times), mass=np.asarray(masses),
        mean_fitness=np.asarray(fitness), distance=np.asarray(dists),
        scheme=scheme, distance_norm=distance_norm,
        snapshots=snaps, snapshot_times=snap_ts, clip_count=clip_count,
    )


def weighted_mass(u0: Field, weight: Field) -> float:
    """<u0, weight>; pass phi (even kernels) or the adjoint eigenvector."""
    return inner_product(u0, weight)


def fit_rate(trace: EvolutionTrace, target: Field | None = None,
             burn_in: float | None = None,
             distance_norm: str | None = None) -> RateFit:
    """Least-squares slope of log(distance) on [burn_in, T]; rate = -slope.

    With a target field and recorded snapshots the distances are recomputed
    against that target (on the trace's reporting scale e^{lambda* t});
    otherwise the trace's own series is fitted. Distances at or below the
    1e-14 floor are excluded.
    """
    if burn_in is None:
        burn_in = 0.2 * float(trace.times[-1])
    nrm = distance_norm or trace.distance_norm
    if target is not None:
        if not trace.snapshots:
            raise MutselError("rate fit against a target needs snapshots")
        ts = np.asarray(trace.snapshot_times)
        ds = np.array([
            norm(Field(s.grid,
                       math.exp(trace.lambda_star * t) * s.values - target.values),
                 nrm)
            for t, s in zip(ts, trace.snapshots)
        ])
    else:
        ts = trace.times
        ds = trace.distance

    keep = (ts >= burn_in) & np.isfinite(ds) & (ds > _DIST_FLOOR)
    if int(np.sum(keep)) < 10:
        raise MutselError(
            f"rate fit needs >= 10 usable samples after burn_in={burn_in:g},"
            f" got {int(np.sum(keep))}"
        )
    x = ts[keep]
    y = np.log(ds[keep])
    A = np.column_stack([x, np.ones_like(x)])
    sol, *_ = np.linalg.lstsq(A, y, rcond=None)
    fitted = A @ sol
    resid = float(np.sqrt(np.mean((y - fitted) ** 2)))
    fit = RateFit(rate=-float(sol[0]), residual=resid, points=int(np.sum(keep)))
    trace.fitted_rate = fit.rate
    trace.fit_residual = fit.residual
    return fit


def mass_identity_defect(trace: EvolutionTrace, lambda_star: float) -> float:
    """Integrated mass identity of the shifted flow: with m(t) and f(t) the
    shifted mass and mean fitness, m(t) - m(0) should equal the time integral
    of lambda* m - f; returns the worst deviation over the trace (trapezoid
    in time)."""
    ts = trace.times
    scale = np.exp(lambda_star * ts)
    m = scale * trace.mass
    f = scale * trace.mean_fitness
    integrand = lambda_star * m - f
    dt = np.diff(ts)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * dt * (integrand[1:] + integrand[:-1]))])
    return float(np.max(np.abs(m - m[0] - cum)))
