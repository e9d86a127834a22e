"""The discrete operator L u = -K*u + W u and its dense-matrix form.

The convolution is a weighted lattice sum: (K*u)_i = sigma^2 h^dim sum_j
w_j k(x_i - x_j) u_j with trapezoid weights w inside the sum and kernel
samples taken at exact lattice differences. With the weights inside, L is
exactly self-adjoint with respect to the trapezoid inner product (the
similarity transform by sqrt(w) is exactly symmetric), and the Schur test
gives the discrete Young bound ||K*u|| <= sigma^2 ||u|| with no tolerance.

Kernel samples are renormalized to exact unit discrete mass (h * sum = 1)
whenever the analytic support fits the sampled difference range; a kernel
wider than the domain keeps its raw (deficient) samples so truncation shows
up as reduced row sums instead of being silently inflated away.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.signal import fftconvolve

from .errors import DenseCapError, GridMismatchError, MutselError
from .grid import Field, inner_product
from .model import Problem

DENSE_CAP = 4096

CONV_MODES = ("padded_fast", "direct")


@dataclass(eq=False)
class DiscreteOperator:
    """L on a fixed problem; immutable inputs, internally cached plans."""

    problem: Problem
    conv_mode: str = "padded_fast"
    _dense: np.ndarray | None = field(default=None, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __post_init__(self):
        if self.conv_mode not in CONV_MODES:
            raise MutselError(f"unknown conv_mode {self.conv_mode!r}")

    @property
    def grid(self):
        return self.problem.grid

    @property
    def sigma2(self) -> float:
        return self.problem.sigma2

    @cached_property
    def w_values(self) -> np.ndarray:
        return self.problem.w_field.values

    @cached_property
    def kernel_samples(self) -> np.ndarray:
        """Unit-mass 1d lattice samples of J at differences -(n-1)h..(n-1)h."""
        grid = self.grid
        z = (np.arange(2 * grid.n - 1) - (grid.n - 1)) * grid.h
        k1 = self.problem.kernel.evaluate(z)
        raw = grid.h * float(np.sum(k1))
        if raw <= 0.0:
            raise MutselError(
                "kernel has no mass on the lattice (support narrower than h?)"
            )
        if self._renormalizable():
            k1 = k1 / raw
        return k1

    def _renormalizable(self) -> bool:
        kern = self.problem.kernel
        if kern.shape == "gaussian":
            reach = 2.0 * self.grid.radius
            return reach >= 9.0 * kern.half_width + abs(kern.center)
        return kern.support_half_width <= 2.0 * self.grid.radius

    def convolve(self, u: Field) -> Field:
        """K*u (sigma^2 included); fast mode is zero-padded linear convolution."""
        grid = self._check(u)
        n, h = grid.n, grid.h
        k1 = self.kernel_samples
        scale = self.sigma2 * grid.cell
        if grid.dim == 1:
            wu = grid.weights() * u.values
            if self.conv_mode == "padded_fast":
                full = fftconvolve(wu, k1)
                out = full[n - 1:2 * n - 1]
            else:
                A = k1[(np.arange(n)[:, None] - np.arange(n)[None, :]) + n - 1]
                out = A @ wu
            return u.with_values(scale * out)
        wu = (grid.weights() * u.values).reshape(n, n)
        if self.conv_mode == "padded_fast":
            k2 = np.outer(k1, k1)
            full = fftconvolve(wu, k2)
            out = full[n - 1:2 * n - 1, n - 1:2 * n - 1]
        else:
            A = k1[(np.arange(n)[:, None] - np.arange(n)[None, :]) + n - 1]
            out = A @ wu @ A.T
        return u.with_values(scale * out.ravel())

    def apply_L(self, u: Field) -> Field:
        """L u = -K*u + W u; the stiff diagonal part is exact nodewise."""
        conv = self.convolve(u)
        return u.with_values(self.w_values * u.values - conv.values)

    def apply_generator(self, u: Field) -> Field:
        """Linear-flow generator G u = K*u - (W + sigma^2) u = -(L + sigma^2) u."""
        conv = self.convolve(u)
        return u.with_values(conv.values - (self.w_values + self.sigma2) * u.values)

    def assemble_dense(self, cap: int = DENSE_CAP) -> np.ndarray:
        """M[i,j] = -sigma^2 h^dim w_j k(x_i - x_j) + W(x_i) delta_ij."""
        grid = self.grid
        if grid.size > cap:
            raise DenseCapError(
                f"dense assembly needs {grid.size} rows, cap is {cap};"
                " reduce n or skip dense oracle checks"
            )
        with self._lock:
            if self._dense is None:
                self._dense = self._build_dense()
            return self._dense

    def _build_dense(self) -> np.ndarray:
        grid = self.grid
        n = grid.n
        k1 = self.kernel_samples
        idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) + n - 1
        w1 = np.ones(n)
        w1[0] = w1[-1] = 0.5
        K1w = k1[idx] * w1[None, :]
        if grid.dim == 1:
            conv = self.sigma2 * grid.cell * K1w
        else:
            conv = self.sigma2 * grid.cell * np.kron(K1w, K1w)
        return -conv + np.diag(self.w_values)

    def symmetrized_dense(self, cap: int = DENSE_CAP) -> tuple[np.ndarray, np.ndarray]:
        """(S, sqrt_w) with S = D^{1/2} M D^{-1/2}, D = diag(trapezoid weights).

        S is exactly symmetric for even kernels; an eigenvector psi of S maps
        back to an eigenvector psi/sqrt_w of M.
        """
        M = self.assemble_dense(cap)
        sw = np.sqrt(self.grid.weights())
        return M * sw[:, None] / sw[None, :], sw

    def _check(self, u: Field):
        if u.grid != self.grid:
            raise GridMismatchError(
                f"field grid {u.grid} does not match operator grid {self.grid}"
            )
        return self.grid


def convolve(op: DiscreteOperator, u: Field) -> Field:
    return op.convolve(u)


def apply_L(op: DiscreteOperator, u: Field) -> Field:
    return op.apply_L(u)


def assemble_dense(op: DiscreteOperator, cap: int = DENSE_CAP) -> np.ndarray:
    return op.assemble_dense(cap)


def dense_to_csv(op: DiscreteOperator, path, cap: int = DENSE_CAP) -> None:
    np.savetxt(path, op.assemble_dense(cap), delimiter=",", fmt="%.17g")


def energy(op: DiscreteOperator, u: Field) -> float:
    """E(u) = -<K*u, u> + <W u, u> in the trapezoid inner product."""
    conv = op.convolve(u)
    w_u = u.with_values(op.w_values * u.values)
    return inner_product(w_u, u) - inner_product(conv, u)


def make_operator(problem: Problem, conv_mode: str = "padded_fast") -> DiscreteOperator:
    return DiscreteOperator(problem=problem, conv_mode=conv_mode)
