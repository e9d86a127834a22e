"""Principal eigenpair: solver routes, certificates, adjoint pairing."""

import numpy as np
import pytest
import scipy.linalg

from mutsel import (
    ConvergenceError,
    Field,
    MutselError,
    adjoint_eigenpair,
    make_operator,
    principal_eigenpair,
    rayleigh_quotient,
    verify_groundstate,
)
from mutsel.eigensolver import dense_spectrum, spectrum_bottom
from mutsel.grid import inner_product, norm
from mutsel.operator import energy

POWER_LAMBDA1 = -0.0351700856313884
QUAD_LAMBDA1 = -0.641591685195205


def test_variational_matches_inverse_power(power_op):
    var = principal_eigenpair(power_op, tol=1e-10)
    inv = principal_eigenpair(power_op, tol=1e-10, method="inverse_power")
    assert abs(var.lambda1 - inv.lambda1) <= 1e-8
    assert np.max(np.abs(var.phi.values - inv.phi.values)) <= 1e-6


def test_power_problem_eigenvalue(power_pair):
    assert abs(power_pair.lambda1 - POWER_LAMBDA1) <= 1e-9


def test_quadratic_problem_eigenvalue(quad_pair):
    assert abs(quad_pair.lambda1 - QUAD_LAMBDA1) <= 1e-9


def test_dense_oracle_agreement(power_op, power_pair):
    S, _ = power_op.symmetrized_dense()
    bottom = float(scipy.linalg.eigh(S, eigvals_only=True,
                                     subset_by_index=[0, 0])[0])
    assert abs(power_pair.lambda1 - bottom) <= 1e-9


def test_phi_positive_unit_norm(power_pair, quad_pair):
    for pair in (power_pair, quad_pair):
        assert np.min(pair.phi.values) > 0.0
        assert abs(norm(pair.phi, "L2") - 1.0) <= 1e-12


def test_residual_small(power_pair, power_op):
    r = power_op.apply_L(power_pair.phi)
    direct = norm(r.with_values(r.values - power_pair.lambda1
                                * power_pair.phi.values), "L2")
    assert direct <= 1e-8
    assert power_pair.residual <= 1e-8


def test_certificates(power_pair, power_op):
    rep = verify_groundstate(power_pair, power_op)
    assert rep.positivity and rep.min_phi > 0
    assert rep.pointwise_bound and rep.tightest_slack >= 0
    assert rep.interval
    assert -power_op.sigma2 < rep.lambda1 < 0
    assert rep.boundary_decay
    for key in ("positivity", "interval_bound", "pointwise_bound"):
        assert power_pair.certificates[key]


def test_ground_state_is_simple(power_op, power_pair):
    S, sw = power_op.symmetrized_dense()
    vals, vecs = scipy.linalg.eigh(S, subset_by_index=[0, 1])
    assert vals[1] - vals[0] > 1e-4  # genuine spectral separation
    v2 = Field(power_op.grid, vecs[:, 1] / sw)
    v2 = v2.with_values(v2.values / norm(v2, "L2"))
    assert abs(inner_product(v2, power_pair.phi)) <= 1e-8


def test_energy_of_ground_state_equals_eigenvalue(power_op, power_pair):
    e = energy(power_op, power_pair.phi)
    assert abs(e - power_pair.lambda1) <= 1e-12


def test_rayleigh_quotient_is_bounded_below(power_op, power_pair):
    g = power_op.grid
    rng = np.random.default_rng(13)
    for _ in range(50):
        u = Field(g, rng.standard_normal(g.size))
        assert rayleigh_quotient(power_op, u) >= power_pair.lambda1 - 1e-10


def test_spectrum_bottom_ordered(power_op, power_pair):
    vals = spectrum_bottom(power_op, 4)
    assert vals == sorted(vals)
    assert abs(vals[0] - power_pair.lambda1) <= 1e-8
    full = dense_spectrum(power_op)
    assert abs(full[0] - vals[0]) <= 1e-10


def test_adjoint_pair_even_kernel(power_op, power_pair):
    adj = adjoint_eigenpair(power_op, power_pair, tol=1e-10)
    assert abs(adj.lambda1 - power_pair.lambda1) <= 1e-8
    assert abs(inner_product(adj.phi_star, power_pair.phi) - 1.0) <= 1e-10
    # self-adjoint case: phi_star is phi up to the pairing normalization
    scale = inner_product(power_pair.phi, power_pair.phi)
    ref = power_pair.phi.values / scale
    assert np.max(np.abs(adj.phi_star.values - ref)) <= 1e-6 * np.max(ref)


def test_noneven_kernel_routes(noneven_problem):
    op = make_operator(noneven_problem)
    with pytest.raises(MutselError):
        principal_eigenpair(op)  # variational needs an even kernel
    pair = principal_eigenpair(op, tol=1e-10, method="inverse_power")
    assert np.min(pair.phi.values) > 0
    assert pair.lambda1 > -op.sigma2
    adj = adjoint_eigenpair(op, pair, tol=1e-10)
    assert abs(adj.lambda1 - pair.lambda1) <= 1e-8
    assert abs(inner_product(adj.phi_star, pair.phi) - 1.0) <= 1e-10
    # transpose eigenvector genuinely differs from phi for a shifted kernel
    a = adj.phi_star.values / norm(adj.phi_star, "L2")
    b = pair.phi.values
    assert np.max(np.abs(a - b)) > 1e-3


def test_unknown_method_rejected(power_op):
    with pytest.raises(MutselError):
        principal_eigenpair(power_op, method="arnoldi")


def test_iteration_budget_enforced(power_op):
    with pytest.raises(ConvergenceError):
        principal_eigenpair(power_op, tol=1e-14, maxiter=2)
