"""Numerics for nonlocal mutation-selection operators L u = -K*u + W u:
discretization, principal eigenpairs, ground-state existence criteria,
spectral-gap lower bounds, and time integration of the linear and
replicator-mutator dynamics."""

from .criteria import (
    CriteriaReport,
    TestSet,
    check_coville,
    check_linkJW,
    check_singularity,
    compute_b_eps,
    evaluate_criteria,
    search_radius,
)
from .dynamics import (
    EvolutionTrace,
    evolve_linear,
    evolve_nonlinear,
    fit_rate,
    mass_identity_defect,
    weighted_mass,
)
from .eigensolver import (
    EigenPair,
    adjoint_eigenpair,
    dense_spectrum,
    principal_eigenpair,
    rayleigh_quotient,
    spectrum_bottom,
    verify_groundstate,
)
from .errors import (
    ConfigError,
    ConvergenceError,
    DenseCapError,
    GridMismatchError,
    MutselError,
    PositivityError,
    QuadratureError,
    ReproductionError,
    SteppingError,
    ValidationFailure,
)
from .grid import Field, Grid, inner_product, mass, norm
from .model import Kernel, Potential, Problem, make_kernel, make_potential, validate
from .operator import DiscreteOperator, energy, make_operator
from .report import VERSION as __version__
from .spectral_gap import (
    GapConfig,
    GapReport,
    compute_a1_a2,
    compute_eta,
    functional_inequality_defect,
    gap_lower_bound,
    omega_sweep,
    phi_bar,
    phi_function,
)

__all__ = [
    "ConfigError", "ConvergenceError", "CriteriaReport", "DenseCapError",
    "DiscreteOperator", "EigenPair", "EvolutionTrace", "Field", "GapConfig",
    "GapReport", "Grid", "GridMismatchError", "Kernel", "MutselError",
    "PositivityError", "Potential", "Problem", "QuadratureError",
    "ReproductionError", "SteppingError", "TestSet", "ValidationFailure",
    "adjoint_eigenpair", "check_coville", "check_linkJW", "check_singularity",
    "compute_a1_a2", "compute_b_eps", "compute_eta", "dense_spectrum",
    "energy", "evaluate_criteria", "evolve_linear", "evolve_nonlinear",
    "fit_rate", "functional_inequality_defect", "gap_lower_bound",
    "inner_product", "make_kernel", "make_operator", "make_potential", "mass",
    "mass_identity_defect", "norm", "omega_sweep", "phi_bar", "phi_function",
    "principal_eigenpair",
    "rayleigh_quotient", "search_radius", "spectrum_bottom", "validate",
    "verify_groundstate", "weighted_mass", "__version__",
]
