"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the requested operation."""


class SingularMatrixError(ArithmeticError):
    """A matrix factorization failed."""


class QuadratureError(ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance."""


class ConvergenceError(RuntimeError):
    """An iterative solver stopped without satisfying its convergence test."""
