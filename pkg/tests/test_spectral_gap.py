"""Certified spectral-gap bound: eta, a1, a2, Phi-bar, a*."""

import math

import numpy as np
import pytest

from mutsel import (
    Field,
    GapConfig,
    Grid,
    MutselError,
    Problem,
    TestSet,
    ValidationFailure,
    compute_eta,
    gap_lower_bound,
    make_kernel,
    make_operator,
    make_potential,
    phi_bar,
)
from mutsel.eigensolver import spectrum_bottom
from mutsel.grid import mass
from mutsel.spectral_gap import (
    compute_a1_a2,
    functional_inequality_defect,
    omega_sweep,
    phi_profile,
)

# power-family values, frozen from closed forms and the bisection solver
A_STAR = {
    (9, 0.1): 0.00939889254047633,
    (17, 0.1): 0.013884587519189029,
    (9, 0.05): 0.0069327494061061264,
}
PHI_BAR_9_01 = 0.015582541018011403


def power_family(m, sigma2):
    return Problem(
        kernel=make_kernel("box", math.sqrt(sigma2), half_width=2.0),
        potential=make_potential("power", m=m),
        grid=Grid(1, 3.0, 256),
    )


def closed_form_floor(m, sigma2):
    return sigma2 * (0.25 - sigma2 / (m - 1)
                     - math.sqrt(2.0 * sigma2 / (m - 1)))


def test_eta_vanishes_when_support_covers_double_omega(power_problem):
    assert compute_eta(GapConfig(problem=power_problem)) == 0.0


def test_eta_positive_when_window_escapes(power_problem):
    # box of half-width 2 no longer covers (-3, 3): essinf drops to zero
    eta = compute_eta(GapConfig(problem=power_problem, omega_radius=1.5))
    assert abs(eta - 0.1 / 4.0) <= 1e-15


def test_a1_a2_closed_forms(power_problem):
    terms = compute_a1_a2(GapConfig(problem=power_problem))
    m, s2 = 9, 0.1
    assert abs(terms.a1 - s2 / (m - 1)) <= 1e-17
    a2_exact = s2 * math.sqrt(2.0 * (1.0 - 5.0 ** (1 - m)) / (m - 1))
    assert abs(terms.a2 - a2_exact) <= 1e-10


def test_phi_bar_matches_quadratic_root(power_problem):
    cfg = GapConfig(problem=power_problem)
    terms = compute_a1_a2(cfg)
    pb = phi_bar(cfg, terms=terms)
    # eta = 0: the branch crossing solves (1+a1) s^2 + a2 s - sigma^2 = 0
    s2 = power_problem.sigma2
    disc = terms.a2**2 + 4.0 * (1.0 + terms.a1) * s2
    s = (-terms.a2 + math.sqrt(disc)) / (2.0 * (1.0 + terms.a1))
    assert abs(pb - (s2 - s * s)) <= 1e-11
    assert abs(pb - PHI_BAR_9_01) <= 1e-11


@pytest.mark.parametrize("m,sigma2", sorted(A_STAR))
def test_a_star_frozen_and_above_floor(m, sigma2):
    rep = gap_lower_bound(GapConfig(problem=power_family(m, sigma2)), tol=1e-10)
    assert abs(rep.a_star - A_STAR[(m, sigma2)]) <= 1e-12
    assert rep.a_star >= closed_form_floor(m, sigma2)
    assert rep.eta == 0.0
    assert rep.rate_claim is not None


def test_a_star_stays_below_dense_gap(power_op, power_problem):
    rep = gap_lower_bound(GapConfig(problem=power_problem), tol=1e-10)
    bottom = spectrum_bottom(power_op, 2)
    assert 0.0 < rep.a_star <= bottom[1] - bottom[0]


def test_functional_inequality_mean_zero(power_op, power_problem):
    cfg = GapConfig(problem=power_problem)
    g = power_problem.grid
    one = Field(g, np.ones(g.size))
    rng = np.random.default_rng(19)
    for _ in range(100):
        u = Field(g, rng.standard_normal(g.size))
        u = u.with_values(u.values - mass(u) / mass(one))
        assert functional_inequality_defect(cfg, power_op, u) <= 1e-8


def test_phi_profile_shape(power_problem):
    cfg = GapConfig(problem=power_problem)
    prof = phi_profile(cfg, points=101)
    assert len(prof) == 101
    xis = [x for x, _ in prof]
    assert xis[0] == 0.0 and abs(xis[-1] - power_problem.sigma2) <= 1e-15
    peak = max(v for _, v in prof)
    pb = phi_bar(cfg)
    assert peak <= pb + 1e-10  # profile never exceeds the computed sup
    assert pb - peak <= 1e-3  # and the sampled peak comes close to it


def test_divergent_complement_gives_degenerate_phi_bar():
    # zeros of W outside Omega make both coefficients blow up
    prob = Problem(
        kernel=make_kernel("box", math.sqrt(0.1), half_width=2.0),
        potential=make_potential("double_well"),
        grid=Grid(1, 3.0, 256),
    )
    cfg = GapConfig(problem=prob, omega_radius=0.5)
    terms = compute_a1_a2(cfg)
    assert math.isinf(terms.a1) and math.isinf(terms.a2)
    assert phi_bar(cfg, terms=terms) == prob.sigma2
    with pytest.raises(ValidationFailure):
        gap_lower_bound(cfg)  # W(0) != 0: not a ground-state problem


def test_omega_sweep(power_problem):
    radii = [0.8, 1.0, 1.2]
    sweep = omega_sweep(power_problem, TestSet(1.0, 1e-6), radii)
    assert [r for r, _ in sweep] == radii
    ref = gap_lower_bound(GapConfig(problem=power_problem), tol=1e-10)
    by_r = dict(sweep)
    assert abs(by_r[1.0] - ref.a_star) <= 1e-12


def test_gap_config_validation(power_problem):
    with pytest.raises(MutselError):
        GapConfig(problem=power_problem, omega_radius=0.0)


def test_report_lines(power_problem):
    rep = gap_lower_bound(GapConfig(problem=power_problem), tol=1e-10)
    text = "\n".join(rep.lines())
    for label in ("eta =", "a1 =", "a2 =", "phi_bar =", "b_eps =", "a_star ="):
        assert label in text
    assert "gap claim" in text


def test_inequality_defect_rejects_mismatched_grid(power_problem):
    cfg = GapConfig(problem=power_problem)
    other = Problem(kernel=power_problem.kernel,
                    potential=power_problem.potential,
                    grid=Grid(1, 3.0, 128))
    op = make_operator(other)
    u = Field(other.grid, np.ones(other.grid.size))
    with pytest.raises(MutselError):
        functional_inequality_defect(cfg, op, u)
