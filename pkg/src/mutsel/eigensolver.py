"""Principal eigenpair of L by two independent routes, plus the adjoint pair.

variational: preconditioned three-term Rayleigh-Ritz descent for the energy
E(u) = -<K*u,u> + <Wu,u> on the discrete unit sphere, with the iterate
replaced by |iterate| each step (the energy never increases under taking
absolute values, so the projection is free and pins the positive branch).

inverse_power: power iteration on (L + (sigma^2 + delta) I)^{-1} with
delta = 0.1 sigma^2; the spectrum of L lies in (-sigma^2, inf), so the
shifted operator is positive definite and the resolvent's dominant mode is
the bottom eigenvalue. Even kernels solve matrix-free with Jacobi-PCG in the
trapezoid inner product; non-even kernels fall back to a dense LU factor.

Both return a nonnegative, L2-normalized eigenvector: the converged vector
is sign-flipped to positive mass, entries below -1e-8 * max are an error
(singular regime or bad truncation), smaller dips are clipped to zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import ConvergenceError, MutselError, PositivityError
from .grid import Field, inner_product, mass, norm
from .operator import DENSE_CAP, DiscreteOperator, energy

NEG_PART_TOL = 1e-8


@dataclass(frozen=True)
class EigenPair:
    lambda1: float
    phi: Field
    residual: float
    method: str
    iterations: int
    sigma2: float
    certificates: dict

    @property
    def lambda_star(self) -> float:
        return self.lambda1 + self.sigma2


@dataclass(frozen=True)
class AdjointPair:
    phi_star: Field
    lambda1: float
    residual: float


@dataclass(frozen=True)
class CertificateReport:
    positivity: bool
    min_phi: float
    pointwise_bound: bool
    tightest_slack: float
    interval: bool
    lambda1: float
    sigma2: float
    boundary_decay: bool
    boundary_ratio: float

    def lines(self) -> list[str]:
        return [
            f"positivity: {'pass' if self.positivity else 'FAIL'}"
            f" (min phi {self.min_phi:.6g})",
            f"pointwise_bound: {'pass' if self.pointwise_bound else 'FAIL'}"
            f" (tightest slack {self.tightest_slack:.6g})",
            f"interval: {'pass' if self.interval else 'FAIL'}"
            f" (lambda1 {self.lambda1:.12g} vs -sigma^2 {-self.sigma2:.12g})",
            f"boundary_decay: {'ok' if self.boundary_decay else 'warn'}"
            f" (boundary/max ratio {self.boundary_ratio:.3g})",
        ]


def _weighted_dot(grid, w, a, b) -> float:
    return float(grid.cell * np.sum(w * a * b))


def _start_vector(op: DiscreteOperator) -> np.ndarray:
    with np.errstate(under="ignore"):
        u = np.exp(-op.w_values)
    if not np.any(u > 0):
        u = np.ones_like(u)
    return u


def _finalize_vector(op: DiscreteOperator, vals: np.ndarray) -> Field:
    u = Field(op.grid, vals)
    if mass(u) < 0:
        vals = -vals
    mx = float(np.max(vals))
    if mx <= 0:
        raise PositivityError("converged eigenvector has no positive part")
    neg = float(np.min(vals))
    if neg < -NEG_PART_TOL * mx:
        raise PositivityError(
            f"eigenvector negative part {neg:.3g} exceeds {NEG_PART_TOL:g} * max;"
            " singular-ground-state regime or domain truncation too tight"
        )
    vals = np.maximum(vals, 0.0)
    u = Field(op.grid, vals)
    return u.with_values(vals / norm(u, "L2"))


def _residual(op: DiscreteOperator, u: Field, lam: float) -> float:
    r = op.apply_L(u).values - lam * u.values
    return norm(Field(op.grid, r), "L2")


def _jacobi_diag(op: DiscreteOperator, shift: float) -> np.ndarray:
    k0 = op.kernel_samples[op.grid.n - 1]
    if op.grid.dim == 2:
        k0 = k0 * k0
    w = op.grid.weights()
    d = op.w_values + shift - op.sigma2 * op.grid.cell * w * k0
    return np.maximum(d, 1e-12)


def _pcg_solve(op: DiscreteOperator, shift: float, b: np.ndarray,
               diag: np.ndarray, tol: float = 1e-12, maxiter: int = 500) -> np.ndarray:
    """Matrix-free PCG for (L + shift I) x = b, self-adjoint in the trapezoid
    inner product (even kernels only)."""
    grid = op.grid
    w = grid.weights()

    def apply_A(x):
        f = Field(grid, x)
        return op.apply_L(f).values + shift * x

    x = b / diag
    r = b - apply_A(x)
    z = r / diag
    p = z.copy()
    rz = _weighted_dot(grid, w, r, z)
    bnorm = math.sqrt(max(_weighted_dot(grid, w, b, b), 1e-300))
    for _ in range(maxiter):
        Ap = apply_A(p)
        alpha = rz / _weighted_dot(grid, w, p, Ap)
        x += alpha * p
        r -= alpha * Ap
        if math.sqrt(max(_weighted_dot(grid, w, r, r), 0.0)) <= tol * bnorm:
            break
        z = r / diag
        rz_new = _weighted_dot(grid, w, r, z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x


def principal_eigenpair(op: DiscreteOperator, tol: float = 1e-8,
                        method: str = "variational",
                        maxiter: int = 5000) -> EigenPair:
    """Bottom eigenpair (lambda1, phi) with ||phi||_{L2} = 1 and phi >= 0."""
    if method == "variational":
        if not op.problem.kernel.even:
            raise MutselError(
                "variational route needs an even kernel (self-adjoint L);"
                " use method='inverse_power'"
            )
        lam, vals, iters = _minimize_energy(op, tol, maxiter)
    elif method == "inverse_power":
        lam, vals, iters = _inverse_power(op, tol, maxiter)
    else:
        raise MutselError(f"unknown eigensolver method {method!r}")

    phi = _finalize_vector(op, vals)
    lam = rayleigh_quotient(op, phi) if op.problem.kernel.even else lam
    res = _residual(op, phi, lam)
    certificates = {
        "positivity": bool(np.min(phi.values) > 0.0),
        "interval_bound": bool(-op.sigma2 < lam),
        "pointwise_bound": _pointwise_bound_ok(op, phi, lam),
    }
    return EigenPair(lambda1=lam, phi=phi, residual=res, method=method,
                     iterations=iters, sigma2=op.sigma2,
                     certificates=certificates)


def rayleigh_quotient(op: DiscreteOperator, u: Field) -> float:
    nrm2 = inner_product(u, u)
    if nrm2 <= 0:
        raise MutselError("Rayleigh quotient of the zero field")
    return energy(op, u) / nrm2


def _minimize_energy(op: DiscreteOperator, tol: float, maxiter: int):
    grid = op.grid
    w = grid.weights()
    diag = _jacobi_diag(op, 1.1 * op.sigma2)

    def wdot(a, b):
        return _weighted_dot(grid, w, a, b)

    u = _start_vector(op)
    u = u / math.sqrt(wdot(u, u))
    prev_dir = None
    lam = math.inf
    for it in range(1, maxiter + 1):
        Lu = op.apply_L(Field(grid, u)).values
        lam = wdot(Lu, u)
        r = Lu - lam * u
        res = math.sqrt(max(wdot(r, r), 0.0))
        if res <= tol:
            return lam, u, it
        basis = [u, r / diag]
        if prev_dir is not None:
            basis.append(prev_dir)
        ortho = []
        for v in basis:
            v = v.copy()
            for q in ortho:
                v -= wdot(v, q) * q
            nv = math.sqrt(max(wdot(v, v), 0.0))
            if nv > 1e-13:
                ortho.append(v / nv)
        Lb = [op.apply_L(Field(grid, q)).values for q in ortho]
        k = len(ortho)
        B = np.empty((k, k))
        for i in range(k):
            for j in range(k):
                B[i, j] = wdot(Lb[i], ortho[j])
        B = 0.5 * (B + B.T)
        evals, evecs = np.linalg.eigh(B)
        c = evecs[:, 0]
        new = sum(ci * qi for ci, qi in zip(c, ortho))
        prev_dir = new - wdot(new, u) * u
        new = np.abs(new)
        nn = math.sqrt(max(wdot(new, new), 0.0))
        if nn <= 0:
            raise ConvergenceError("energy minimizer collapsed to zero")
        u = new / nn
    raise ConvergenceError(
        f"energy minimization did not reach residual {tol:g} in {maxiter} iterations",
        residual=res,
    )


def _inverse_power(op: DiscreteOperator, tol: float, maxiter: int):
    grid = op.grid
    w = grid.weights()
    shift = (1.0 + 0.1) * op.sigma2  # L + (sigma^2 + delta) I, delta = 0.1 sigma^2
    even = op.problem.kernel.even

    if even:
        diag = _jacobi_diag(op, shift)

        def solve(b):
            return _pcg_solve(op, shift, b, diag)
    else:
        M = op.assemble_dense()
        lu = linalg.lu_factor(M + shift * np.eye(M.shape[0]))

        def solve(b):
            return linalg.lu_solve(lu, b)

    def wdot(a, b):
        return _weighted_dot(grid, w, a, b)

    u = _start_vector(op)
    u = u / math.sqrt(wdot(u, u))
    lam = wdot(op.apply_L(Field(grid, u)).values, u)
    for it in range(1, maxiter + 1):
        y = solve(u)
        y = y / math.sqrt(wdot(y, y))
        Ly = op.apply_L(Field(grid, y)).values
        lam = wdot(Ly, y)
        r = Ly - lam * y
        res = math.sqrt(max(wdot(r, r), 0.0))
        u = y
        if res <= tol:
            return lam, u, it
    raise ConvergenceError(
        f"inverse power iteration did not reach residual {tol:g}"
        f" in {maxiter} iterations",
        residual=res,
    )


def _pointwise_bound_ok(op: DiscreteOperator, phi: Field, lam: float) -> bool:
    kn = op.problem.kernel.l2_norm(op.grid.dim)
    denom = op.w_values - lam
    if np.any(denom <= 0):
        return False
    return bool(np.all(phi.values <= kn / denom * (1.0 + 1e-6)))


def verify_groundstate(pair: EigenPair, op: DiscreteOperator) -> CertificateReport:
    """Positivity, pointwise-decay, and interval certificates for a computed pair."""
    phi = pair.phi
    vals = phi.values
    min_phi = float(np.min(vals))
    positivity = min_phi > 0.0

    kn = op.problem.kernel.l2_norm(op.grid.dim)
    denom = op.w_values - pair.lambda1
    if np.any(denom <= 0):
        pointwise = False
        slack = -math.inf
    else:
        bound = kn / denom * (1.0 + 1e-6)
        slack = float(np.min(bound - vals))
        pointwise = slack >= 0.0

    interval = -op.sigma2 < pair.lambda1

    mx = float(np.max(np.abs(vals)))
    if op.grid.dim == 1:
        bvals = max(abs(vals[0]), abs(vals[-1]))
    else:
        sq = np.abs(phi.reshaped())
        bvals = max(sq[0, :].max(), sq[-1, :].max(), sq[:, 0].max(), sq[:, -1].max())
    ratio = bvals / mx if mx > 0 else math.inf

    return CertificateReport(
        positivity=positivity, min_phi=min_phi,
        pointwise_bound=pointwise, tightest_slack=slack,
        interval=interval, lambda1=pair.lambda1, sigma2=op.sigma2,
        boundary_decay=ratio <= 1e-6, boundary_ratio=ratio,
    )


def spectrum_bottom(op: DiscreteOperator, k: int, cap: int = DENSE_CAP) -> list[float]:
    """k smallest eigenvalues of the dense symmetric form, ascending."""
    if not op.problem.kernel.even:
        raise MutselError("spectrum_bottom needs an even kernel (symmetric form)")
    if k < 1:
        raise MutselError(f"need k >= 1, got {k}")
    S, _ = op.symmetrized_dense(cap)
    S = 0.5 * (S + S.T)  # scrub rounding asymmetry before eigh
    evals = linalg.eigh(S, eigvals_only=True, subset_by_index=[0, k - 1])
    return [float(v) for v in evals]


def dense_spectrum(op: DiscreteOperator, cap: int = DENSE_CAP) -> np.ndarray:
    """All eigenvalues of the dense symmetric form, ascending (even kernels)."""
    if not op.problem.kernel.even:
        raise MutselError("dense_spectrum needs an even kernel (symmetric form)")
    S, _ = op.symmetrized_dense(cap)
    S = 0.5 * (S + S.T)
    return linalg.eigh(S, eigvals_only=True)


def adjoint_eigenpair(op: DiscreteOperator, pair: EigenPair,
                      tol: float = 1e-8, maxiter: int = 5000,
                      cap: int = DENSE_CAP) -> AdjointPair:
    """Positive eigenvector of the adjoint of L in the trapezoid inner product,
    normalized so <phi_star, phi> = 1.

    The discrete adjoint is D^{-1} M^T D with D = diag(cell * weights): if
    M^T psi = lambda psi then phi_star = psi / weights solves the adjoint
    problem. Solved by shifted inverse power iteration on the dense transpose.
    """
    M = op.assemble_dense(cap)
    shift = 1.1 * op.sigma2
    lu = linalg.lu_factor(M.T + shift * np.eye(M.shape[0]))
    grid = op.grid
    w = grid.weights()

    psi = w * _start_vector(op)
    psi = psi / np.linalg.norm(psi)
    lam = math.nan
    for it in range(1, maxiter + 1):
        y = linalg.lu_solve(lu, psi)
        y = y / np.linalg.norm(y)
        My = M.T @ y
        lam = float(y @ My)
        res = float(np.linalg.norm(My - lam * y))
        psi = y
        if res <= tol:
            break
    else:
        raise ConvergenceError(
            f"adjoint inverse power did not reach residual {tol:g}"
            f" in {maxiter} iterations",
            residual=res,
        )

    vals = psi / w
    star = Field(grid, vals)
    if mass(star) < 0:
        vals = -vals
    mx = float(np.max(vals))
    if mx <= 0:
        raise PositivityError("adjoint eigenvector has no positive part")
    if float(np.min(vals)) < -NEG_PART_TOL * mx:
        raise PositivityError("adjoint eigenvector is not nonnegative")
    vals = np.maximum(vals, 0.0)
    star = Field(grid, vals)

    scale = inner_product(star, pair.phi)
    if scale <= 0:
        raise PositivityError("adjoint pairing <phi_star, phi> is not positive")
    star = star.with_values(vals / scale)

    Ls = _apply_adjoint(op, star)
    res = norm(Field(grid, Ls - lam * star.values), "L2")
    return AdjointPair(phi_star=star, lambda1=lam, residual=res)


def _apply_adjoint(op: DiscreteOperator, u: Field) -> np.ndarray:
    """L* u = -flip(K)*u + W u, the adjoint in the trapezoid inner product."""
    grid = op.grid
    n = grid.n
    k1 = op.kernel_samples[::-1]
    w = grid.weights()
    scale = op.sigma2 * grid.cell
    if grid.dim == 1:
        wu = w * u.values
        conv = np.convolve(wu, k1)[n - 1:2 * n - 1]
    else:
        wu = (w * u.values).reshape(n, n)
        A = k1[(np.arange(n)[:, None] - np.arange(n)[None, :]) + n - 1]
        conv = (A @ wu @ A.T).ravel()
    return op.w_values * u.values - scale * conv
