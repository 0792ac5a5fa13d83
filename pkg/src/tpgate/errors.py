"""Exception hierarchy shared by all modules."""


class TpGateError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(TpGateError, ValueError):
    """An input parameter is out of its allowed range."""


class SolverFailure(TpGateError):
    """An iterative solver did not converge."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DegenerateChainError(TpGateError):
    """Two ions occupy the same position."""


class InstabilityError(TpGateError):
    """A normal mode has non-positive curvature, so the chain is not a stable line."""

    def __init__(self, message, mode_index=None, eigenvalue=None):
        super().__init__(message)
        self.mode_index = mode_index
        self.eigenvalue = eigenvalue


class InfeasibleError(TpGateError):
    """No amplitude vector can reach the target conditional phase."""
