"""Ground-state existence criteria on closed-form and random problems."""

import math

import numpy as np
import pytest

from mutsel import (
    Grid,
    MutselError,
    Problem,
    TestSet,
    check_coville,
    check_linkJW,
    check_singularity,
    compute_b_eps,
    evaluate_criteria,
    make_kernel,
    make_potential,
    search_radius,
)

# W = sqrt|x| with the half-box kernel on [-1, 1] has closed-form integrals:
# int_B 1/W = 4 and iint_{BxB} J(x-y)/(W(x)W(y)) = 4 + pi on B = [-1, 1].
SQRT_DOUBLE = 4.0 + math.pi
SQRT_SINGLE = 4.0

# power potential family used across the suite (m = 9, sigma^2 = 0.1)
B_EPS_SWEEP = {
    1e-4: 0.023886666447442688,
    1e-6: 0.024981433558487733,
    1e-8: 0.02499969029450297,
}


def test_sqrt_integral_oracles(sqrt_problem_factory):
    prob = sqrt_problem_factory(1.0)
    res = check_linkJW(prob, TestSet(1.0, 0.0))
    assert abs(res.rhs - SQRT_SINGLE) <= 1e-8
    assert abs(res.lhs - SQRT_DOUBLE) <= 1e-6
    assert res.holds


def test_b_eps_closed_form(sqrt_problem_factory):
    prob = sqrt_problem_factory(1.0)
    b = compute_b_eps(prob, TestSet(1.0, 0.0))
    assert abs(b - math.pi / 16.0) <= 1e-6


def test_linkJW_threshold(sqrt_problem_factory):
    # holds iff sigma^2 > 4 / (4 + pi) ~ 0.5601
    assert check_linkJW(sqrt_problem_factory(0.5701), TestSet(1.0, 0.0)).holds
    assert not check_linkJW(sqrt_problem_factory(0.5501), TestSet(1.0, 0.0)).holds


def test_coville_threshold(sqrt_problem_factory):
    # essinf over [-1/2, 1/2] is sqrt(2): holds iff sigma^2 > 1/sqrt(2)
    res = check_coville(sqrt_problem_factory(0.7171), TestSet(0.5, 0.0))
    assert abs(res.essinf_value - math.sqrt(2.0)) <= 1e-6
    assert res.holds
    assert not check_coville(sqrt_problem_factory(0.65), TestSet(0.5, 0.0)).holds


def test_radius_profile_branches(sqrt_problem_factory):
    prob = sqrt_problem_factory(1.0)

    def f_exact(R):
        if R <= 0.5:
            return 2.0 * math.sqrt(R)
        if R <= 1.0:
            return math.sqrt(R) + math.sqrt(1.0 - R)
        return math.sqrt(R) - math.sqrt(R - 1.0)

    search = search_radius(prob, 0.0, [0.2, 0.5, 0.8, 1.3])
    for R, val in search.profile:
        assert abs(val - f_exact(R)) <= 1e-8
    assert search.best_R == 0.5
    assert abs(search.best_value - math.sqrt(2.0)) <= 1e-10


def test_radius_search_finds_half(sqrt_problem_factory):
    prob = sqrt_problem_factory(1.0)
    radii = np.linspace(0.05, 1.45, 281)
    search = search_radius(prob, 0.0, radii)
    assert abs(search.best_R - 0.5) <= 0.005
    assert abs(search.best_value - math.sqrt(2.0)) <= 1e-4


def test_b_eps_monotone_in_eps(power_problem):
    vals = []
    for eps, frozen in sorted(B_EPS_SWEEP.items(), reverse=True):
        b = compute_b_eps(power_problem, TestSet(1.0, eps))
        assert abs(b - frozen) <= 1e-12
        vals.append(b)
    assert vals == sorted(vals)  # shrinking eps only helps
    assert all(b < power_problem.sigma2 / 4.0 for b in vals)


def test_large_eps_starves_the_set(power_problem):
    res = check_linkJW(power_problem, TestSet(1.0, 1e-2))
    assert not res.holds
    assert compute_b_eps(power_problem, TestSet(1.0, 1e-2)) < 0


def test_coville_implies_linkJW():
    rng = np.random.default_rng(71)
    seen_cov = 0
    for _ in range(20):
        sigma2 = float(rng.uniform(0.2, 1.2))
        hw = float(rng.uniform(0.5, 2.5))
        m = int(rng.choice([2, 3, 4, 6, 9]))
        radius = float(rng.uniform(0.3, 1.2))
        prob = Problem(
            kernel=make_kernel("box", math.sqrt(sigma2), half_width=hw),
            potential=make_potential("power", m=m),
            grid=Grid(1, 3.0, 64),
        )
        tset = TestSet(radius, 1e-6)  # eps > 0: 1/W integrable on the set
        cov = check_coville(prob, tset)
        link = check_linkJW(prob, tset)
        if cov.holds:
            seen_cov += 1
            assert link.holds
    assert seen_cov > 0  # the implication was actually exercised


def test_singularity_sqrt_oracle(sqrt_problem_factory):
    # whole-line sup of the kernel-window integral of 1/W sits at x = 0
    # with value 2, so the criterion value is 2 sigma^2
    res = check_singularity(sqrt_problem_factory(1.0))
    assert abs(res.sup_value - 2.0) <= 1e-6
    assert not res.is_singular
    assert abs(res.argmax) <= 1e-8

    res = check_singularity(sqrt_problem_factory(0.4))
    assert abs(res.sup_value - 0.8) <= 1e-6
    assert res.is_singular


def test_singularity_infinite_at_nonintegrable_zero(power_problem):
    res = check_singularity(power_problem)
    assert math.isinf(res.sup_value)
    assert not res.is_singular


def test_search_radius_validation(sqrt_problem_factory):
    prob = sqrt_problem_factory(1.0)
    with pytest.raises(MutselError):
        search_radius(prob, 0.0, [0.5, -0.1])
    dim2 = Problem(kernel=prob.kernel, potential=prob.potential,
                   grid=Grid(2, 1.0, 16))
    with pytest.raises(MutselError):
        search_radius(dim2, 0.0, [0.5])


def test_testset_validation():
    with pytest.raises(MutselError):
        TestSet(0.0)
    with pytest.raises(MutselError):
        TestSet(1.0, -1e-3)


def test_full_report(power_problem):
    rep = evaluate_criteria(power_problem, TestSet(1.0, 1e-6),
                            radii=[0.6, 0.8, 1.0, 1.2])
    assert rep.b_eps == (rep.linkJW.lhs - rep.linkJW.rhs) / rep.linkJW.rhs**2
    assert rep.search is not None
    assert rep.best_set.radius == rep.search.best_R
    assert rep.best_set.eps == 1e-6
    assert rep.linkJW.holds  # frozen: b_eps ~ 0.0250 > 0 on this family
