"""Block-maxima and peaks-over-threshold estimation of the extreme value index."""

from .errors import ConvergenceError, DomainError, QuadratureError, SingularMatrixError
from .gev import GevParams, SecondOrderSpec
from .gpd import GpdParams

__all__ = [
    "ConvergenceError",
    "DomainError",
    "GevParams",
    "GpdParams",
    "QuadratureError",
    "SecondOrderSpec",
    "SingularMatrixError",
]
__version__ = "0.1.0"
