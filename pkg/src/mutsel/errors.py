"""Exception types shared across the package.

Every failure mode that callers are expected to branch on gets its own
class; the CLI maps them to exit codes (see cli.py).
"""


class MutselError(Exception):
    """Base class for all package errors."""


class GridMismatchError(MutselError):
    """Two fields (or a field and an operator) live on different grids."""


class QuadratureError(MutselError):
    """Adaptive quadrature failed to reach the requested tolerance.

    Carries the best available estimate and the achieved error bound so
    callers can decide whether the result is still usable.
    """

    def __init__(self, message, best=None, err_bound=None):
        super().__init__(message)
        self.best = best
        self.err_bound = err_bound


class ConvergenceError(MutselError):
    """An iterative solver ran out of iterations.

    ``residual`` is the last residual norm observed.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class PositivityError(MutselError):
    """A quantity that must be (essentially) nonnegative came out negative.

    For eigenvectors this signals either the atomic-ground-state regime or a
    badly truncated domain.
    """


class DenseCapError(MutselError):
    """A dense-matrix route was requested above the configured size cap."""


class SteppingError(MutselError):
    """Time integration produced NaN/overflow or is predictably unstable."""

    def __init__(self, message, step=None, time=None):
        super().__init__(message)
        self.step = step
        self.time = time


class ConfigError(MutselError):
    """Run-configuration file is malformed; message names line and key."""


class ValidationFailure(MutselError):
    """A problem failed its model assumptions; message names the check."""


class ReproductionError(MutselError):
    """A reproduction-command assertion failed; message names the quantity."""
