import math

import pytest

from mutsel import Grid, Problem, make_kernel, make_potential, make_operator
from mutsel.eigensolver import principal_eigenpair


@pytest.fixture(scope="session")
def power_problem():
    # stiff power well: W = |x|^9, sigma^2 = 0.1, box kernel on [-2, 2]
    return Problem(kernel=make_kernel("box", math.sqrt(0.1), half_width=2.0),
                   potential=make_potential("power", m=9),
                   grid=Grid(1, 3.0, 256))


@pytest.fixture(scope="session")
def power_op(power_problem):
    return make_operator(power_problem)


@pytest.fixture(scope="session")
def power_pair(power_op):
    return principal_eigenpair(power_op, tol=1e-10, method="variational")


@pytest.fixture(scope="session")
def quad_problem():
    # quadratic well: W = x^2, sigma^2 = 1, box kernel on [-1, 1]
    return Problem(kernel=make_kernel("box", 1.0, half_width=1.0),
                   potential=make_potential("power", m=2),
                   grid=Grid(1, 8.0, 256))


@pytest.fixture(scope="session")
def quad_op(quad_problem):
    return make_operator(quad_problem)


@pytest.fixture(scope="session")
def quad_pair(quad_op):
    return principal_eigenpair(quad_op, tol=1e-10, method="variational")


@pytest.fixture(scope="session")
def sqrt_problem_factory():
    # criteria study family: W = sqrt|x|, J = half-box on [-1, 1]
    def build(sigma2: float, n: int = 201, radius: float = 2.0):
        return Problem(kernel=make_kernel("box", math.sqrt(sigma2), half_width=1.0),
                       potential=make_potential("sqrt"),
                       grid=Grid(1, radius, n))

    return build


@pytest.fixture(scope="session")
def noneven_problem():
    # shifted box kernel, positivity ball radius 0.5
    return Problem(kernel=make_kernel("box", 1.0, half_width=1.0, center=0.5),
                   potential=make_potential("power", m=2),
                   grid=Grid(1, 7.5, 256))
