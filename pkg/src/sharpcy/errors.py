"""Exception types shared across the package."""


class DomainError(ValueError):
    """Argument outside the domain where a formula is defined."""


class StepSizeError(ValueError):
    """Finite-difference step outside the admissible range."""


class PositivityError(ValueError):
    """A function that must be positive was found non-positive."""


class IntegrationError(RuntimeError):
    """ODE integration failed to reach the requested radius."""


class ConvergenceError(RuntimeError):
    """Iterative linear solve did not reach its residual target."""
