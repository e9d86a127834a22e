import math

import numpy as np
import pytest

from mutsel import Grid, Problem, make_kernel, make_potential, validate
from mutsel.errors import ConfigError
from mutsel.model import Kernel, Potential
from mutsel.quadrature import quad_adaptive


# -- kernels -----------------------------------------------------------------

def test_box_kernel_profile_and_mass():
    k = make_kernel("box", 1.0, half_width=2.0)
    assert k.mass() == 1.0
    assert k.evaluate(0.0) == 0.25
    assert k.evaluate(1.9999) == 0.25
    assert k.evaluate(2.5) == 0.0
    # edge samples are half the interior height
    assert k.evaluate(2.0) == 0.125
    assert k.support_half_width == 2.0
    assert k.even


def test_gaussian_kernel_unit_mass_numeric():
    k = make_kernel("gaussian", 0.7, half_width=0.3)
    val = quad_adaptive(k.evaluate, -6.0, 6.0)
    assert abs(val - 1.0) < 1e-10
    assert not math.isfinite(k.support_half_width)


def test_shifted_box_is_not_even():
    k = make_kernel("box", 1.0, half_width=1.0, center=0.5)
    assert not k.even
    assert k.symmetry_defect() > 0.1
    assert k.support_half_width == 1.5
    assert k.positivity_radius() == 0.5


def test_fully_shifted_box_has_no_origin_ball():
    # support [0, 2]: the origin sits on the boundary, no interior ball
    k = make_kernel("box", 1.0, half_width=1.0, center=1.0)
    assert k.positivity_radius() is None


def test_kernel_l2_norm_closed_forms():
    k = make_kernel("box", math.sqrt(0.1), half_width=2.0)
    # sigma^2 / sqrt(2a) = 0.1 / 2
    assert abs(k.l2_norm(dim=1) - 0.05) < 1e-15
    g = make_kernel("gaussian", 1.0, half_width=0.25)
    expected = 1.0 / math.sqrt(2.0 * 0.25 * math.sqrt(math.pi))
    assert abs(g.l2_norm(dim=1) - expected) < 1e-12


def test_box_window():
    k = make_kernel("box", 1.0, half_width=1.0, center=0.0)
    lo, hi, height = k.window(0.3)
    assert (lo, hi, height) == (-0.7, 1.3, 0.5)


def test_table_kernel_renormalized():
    x = np.linspace(-1, 1, 401)
    j = np.where(np.abs(x) <= 0.5, 3.0, 0.0)  # mass 3, not 1
    k = make_kernel("table", 1.0, table=(x, j), r0=0.4)
    val = quad_adaptive(k.evaluate, -1.0, 1.0, tol=1e-12)
    assert abs(val - 1.0) < 1e-8
    assert k.even


def test_table_kernel_rejects_negative_or_empty():
    x = np.linspace(-1, 1, 11)
    with pytest.raises(ConfigError):
        make_kernel("table", 1.0, table=(x, -np.ones(11)))
    with pytest.raises(ConfigError):
        make_kernel("table", 1.0, table=(x, np.zeros(11)))


def test_kernel_argument_validation():
    with pytest.raises(ConfigError):
        make_kernel("box", 0.0, half_width=1.0)
    with pytest.raises(ConfigError):
        make_kernel("box", 1.0, half_width=-1.0)
    with pytest.raises(ConfigError):
        Kernel(shape="trapezoid", sigma=1.0)


# -- potentials ---------------------------------------------------------------

def test_power_potential_values_and_zeros():
    w = make_potential("power", m=9)
    assert w.value(2.0) == 512.0
    assert w.value(-2.0) == 512.0
    assert w.zeros() == (0.0,)
    assert not w.reciprocal_integrable_at_zeros()
    s = make_potential("sqrt")
    assert s.zeros() == (0.0,)
    assert s.reciprocal_integrable_at_zeros()
    assert abs(s.value(4.0) - 2.0) < 1e-15


def test_shifted_power_has_no_zero():
    w = make_potential("power", m=2, shift=0.3)
    assert w.zeros() == ()
    assert w.min_value() == 0.3


def test_double_well_shape():
    w = make_potential("double_well")  # default shift 1/4: min W = 0
    a = math.sqrt(0.5)
    assert abs(w.value(a)) < 1e-15
    z = w.zeros()
    assert len(z) == 2 and z[0] == -z[1]
    assert abs(z[1] - a) < 1e-14
    assert abs(w.value(0.0) - 0.25) < 1e-15
    assert not w.reciprocal_integrable_at_zeros()


def test_reciprocal_antiderivative_matches_quadrature():
    w = make_potential("power", m=9)
    anti = w.reciprocal_antiderivative()
    val = anti(2.0) - anti(1.0)
    oracle = quad_adaptive(lambda x: 1.0 / w.value(x), 1.0, 2.0, tol=1e-12)
    assert abs(val - oracle) < 1e-10

    dw = make_potential("double_well")
    anti = dw.reciprocal_antiderivative()
    val = anti(3.0) - anti(1.5)
    oracle = quad_adaptive(lambda x: 1.0 / dw.value(x), 1.5, 3.0, tol=1e-12)
    assert abs(val - oracle) < 1e-9


def test_tail_reciprocal_closed_forms():
    w = make_potential("power", m=9)
    # 2 * r^{1-m} / (m-1)
    assert abs(w.tail_reciprocal(1.0) - 0.25) < 1e-14
    assert abs(w.tail_reciprocal(2.0) - 2.0 * 2.0**-8 / 8.0) < 1e-16

    dw = make_potential("double_well")
    body = quad_adaptive(lambda x: 1.0 / dw.value(x), 2.0, 400.0, tol=1e-12)
    rest = 2.0 / (3.0 * 400.0**3)  # crude cap on the quartic tail beyond 400
    got = dw.tail_reciprocal(2.0)
    assert abs(got - 2.0 * body) < 3.0 * rest + 1e-9

    sq = make_potential("sqrt")
    assert not math.isfinite(sq.tail_reciprocal(1.0))  # grows like sqrt


def test_tail_reciprocal_zero_beyond_r_is_infinite():
    dw = make_potential("double_well")
    assert not math.isfinite(dw.tail_reciprocal(0.5))  # zeros at ~0.707 > 0.5


def test_region_at_least():
    w = make_potential("power", m=2)
    segs = w.region_at_least(0.25, -1.0, 1.0)
    flat = [b for seg in segs for b in seg]
    assert np.allclose(flat, [-1.0, -0.5, 0.5, 1.0])
    # eps = 0 only removes the zero itself
    segs0 = w.region_at_least(0.0, -1.0, 1.0)
    flat0 = [b for seg in segs0 for b in seg]
    assert np.allclose(flat0, [-1.0, 0.0, 0.0, 1.0])


def test_table_potential_interpolation():
    x = np.linspace(-2, 2, 5)
    vals = np.array([4.0, 1.0, 0.0, 1.0, 4.0])
    w = make_potential("table", table=(x, vals))
    assert w.value(0.5) == 0.5  # linear between nodes
    assert w.zeros() == (0.0,)
    assert w.min_value() == 0.0


# -- assumption checks --------------------------------------------------------

def _problem(kernel, potential, radius=2.0, n=201):
    return Problem(kernel=kernel, potential=potential,
                   grid=Grid(1, radius, n))


def test_validate_passes_on_even_box_sqrt():
    rep = validate(_problem(make_kernel("box", 0.9, half_width=1.0),
                            make_potential("sqrt")))
    assert rep.all_pass
    assert rep.groundstate_mode_ok
    assert rep.even
    assert rep.find("kernel_unit_mass").measured <= 1e-10


def test_validate_flags_missing_origin_ball():
    # support [0, 2] leaves the origin on the support boundary: the
    # positivity-ball assumption genuinely fails even though J is even-free
    rep = validate(_problem(make_kernel("box", 0.9, half_width=1.0, center=1.0),
                            make_potential("sqrt")))
    check = rep.find("kernel_positive_near_origin")
    assert not check.passed
    assert not rep.all_pass


def test_validate_shifted_ball_passes_with_smaller_radius():
    rep = validate(_problem(make_kernel("box", 1.0, half_width=1.0, center=0.5),
                            make_potential("power", m=2), radius=4.0))
    assert rep.find("kernel_positive_near_origin").passed
    assert rep.find("kernel_evenness").severity == "info"
    assert not rep.even


def test_validate_flags_negative_potential():
    x = np.linspace(-2, 2, 9)
    w = np.array([4.0, 2.0, 1.0, -0.1, 0.0, -0.1, 1.0, 2.0, 4.0])
    rep = validate(_problem(make_kernel("box", 1.0, half_width=0.5),
                            make_potential("table", table=(x, w))))
    assert not rep.find("potential_nonnegative").passed
    assert not rep.all_pass


def test_validate_flags_nonconfining_potential():
    x = np.linspace(-2, 2, 9)
    w = 1.0 / (1.0 + x**2)  # decays outward: not confining
    rep = validate(_problem(make_kernel("box", 1.0, half_width=0.5),
                            make_potential("table", table=(x, w))))
    assert not rep.find("potential_confining").passed


def test_validate_groundstate_checks_are_informational():
    rep = validate(_problem(make_kernel("box", 1.0, half_width=0.5),
                            make_potential("power", m=2, shift=0.5)))
    # W never vanishes: ground-state-mode hints fail but required checks pass
    assert rep.all_pass
    assert not rep.groundstate_mode_ok
    assert rep.find("groundstate_w_vanishes_at_origin").severity == "info"


def test_validate_warns_on_wide_kernel():
    rep = validate(_problem(make_kernel("box", 1.0, half_width=3.0),
                            make_potential("power", m=2), radius=1.0))
    check = rep.find("kernel_support_within_domain")
    assert not check.passed
    assert check.severity == "warning"
    assert rep.all_pass  # warning does not fail the run


def test_problem_truncation_flag(quad_problem):
    assert quad_problem.truncation_ok
    assert quad_problem.sigma2 == 1.0
    assert quad_problem.w_field.values[0] == 64.0


def test_potential_dim2_is_radial():
    w = make_potential("power", m=2)
    g = Grid(2, 1.0, 9)
    f = w.sample(g)
    sq = f.reshaped()
    # W(x, y) = (x^2 + y^2)^{m/2} = r^2 here
    assert abs(sq[0, 0] - 2.0) < 1e-14
    assert abs(sq[4, 4]) < 1e-14


def test_potential_argument_validation():
    with pytest.raises(ConfigError):
        make_potential("power")  # missing exponent
    with pytest.raises(ConfigError):
        make_potential("cubic")
    with pytest.raises(ConfigError):
        Potential(shape="nope")
