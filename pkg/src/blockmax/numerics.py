"""Special functions, adaptive quadrature and 3x3 symmetric linear algebra.

Gamma and digamma are thin wrappers over :mod:`scipy.special` (Cephes),
and :func:`integrate` drives QUADPACK's extrapolating ``qags``/``qagi``
rules through :func:`scipy.integrate.quad`.  Those rules only sample
interior Gauss-Kronrod nodes, which is what makes the improper integrals
over ``(0, 1)`` used by the asymptotic calculus tractable.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np
from scipy import integrate as _spint
from scipy import special as _sp

from .errors import DomainError, QuadratureError, SingularMatrixError

EULER_GAMMA = float(np.euler_gamma)


@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_subdivisions: int = 2000
    endpoint_handling: Literal["open-interval", "closed-interval"] = "open-interval"

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise DomainError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be >= 1")
        if self.endpoint_handling not in ("open-interval", "closed-interval"):
            raise DomainError(f"unknown endpoint handling {self.endpoint_handling!r}")


DEFAULT_QUADRATURE = QuadratureSpec()


def gamma_fn(x: float) -> float:
    """Euler's Gamma function on the positive half-line."""
    if not x > 0:
        raise DomainError(f"gamma_fn requires x > 0, got {x!r}")
    return float(_sp.gamma(x))


def digamma_fn(x: float) -> float:
    """Logarithmic derivative of Gamma on the positive half-line."""
    if not x > 0:
        raise DomainError(f"digamma_fn requires x > 0, got {x!r}")
    return float(_sp.psi(x))


def gamma_prime(x: float) -> float:
    # Gamma'(x) = Gamma(x) psi(x); avoids differentiating numerically
    return gamma_fn(x) * digamma_fn(x)


def integrate(
    f: Callable[[float], float],
    lower: float,
    upper: float,
    spec: QuadratureSpec = DEFAULT_QUADRATURE,
    points=None,
) -> float:
    """Adaptive quadrature of ``f`` over ``(lower, upper)``.

    Infinite limits are allowed. Integrable power-type singularities at the
    endpoints are handled by the extrapolation in QUADPACK; ``points`` may
    list interior break points (finite limits only).

    Raises
    ------
    QuadratureError
        If ``f`` returns a non-finite value inside the interval or the
        requested tolerance ``max(abs_tol, rel_tol*|value|)`` is not met
        within ``spec.max_subdivisions`` subintervals.
    """
    if spec.endpoint_handling == "closed-interval":
        for end in (lower, upper):
            if not math.isfinite(end):
                continue
            try:
                v = f(end)
            except (ArithmeticError, ValueError):
                v = math.nan
            if not math.isfinite(v):
                raise QuadratureError(f"integrand not finite at endpoint {end}")

    def guarded(s):
        v = f(s)
        if not math.isfinite(v):
            raise QuadratureError(f"integrand not finite at s={s!r}")
        return v

    kwargs = dict(
        epsabs=spec.abs_tol,
        epsrel=spec.rel_tol,
        limit=spec.max_subdivisions,
        full_output=1,
    )
    if points is not None:
        kwargs["points"] = points
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", _spint.IntegrationWarning)
        out = _spint.quad(guarded, lower, upper, **kwargs)
    value, abserr = float(out[0]), float(out[1])
    tol = max(spec.abs_tol, spec.rel_tol * abs(value))
    if len(out) > 3 and abserr > tol:
        raise QuadratureError(
            f"quadrature on ({lower}, {upper}) failed: {out[3].strip()} "
            f"(estimate {value!r}, error {abserr:.3g}, tol {tol:.3g})"
        )
    return value


def _cholesky(A):
    A = np.asarray(A, dtype=float)
    if A.shape != (3, 3) or not np.all(np.isfinite(A)):
        raise SingularMatrixError("expected a finite 3x3 matrix")
    return np.linalg.cholesky(A)


def solve3(A, rhs) -> np.ndarray:
    """Solve ``A x = rhs`` for a symmetric nonsingular 3x3 ``A``.

    Symmetric definite matrices (of either sign) go through Cholesky;
    indefinite ones through LU with partial pivoting.
    """
    A = np.asarray(A, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    if A.shape != (3, 3) or not np.all(np.isfinite(A)):
        raise SingularMatrixError("expected a finite 3x3 matrix")
    for sign in (1.0, -1.0):
        try:
            c = np.linalg.cholesky(sign * A)
        except np.linalg.LinAlgError:
            continue
        y = np.linalg.solve(c, sign * rhs)
        return np.linalg.solve(c.T, y)
    try:
        x = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(str(exc)) from exc
    if not np.all(np.isfinite(x)) or np.linalg.cond(A) > 1e15:
        raise SingularMatrixError("matrix is numerically singular")
    return x


def invert3(A) -> np.ndarray:
    """Inverse of a symmetric nonsingular 3x3 matrix, symmetrized."""
    inv = np.column_stack([solve3(A, e) for e in np.eye(3)])
    return 0.5 * (inv + inv.T)


def is_negative_definite(A) -> bool:
    try:
        _cholesky(-np.asarray(A, dtype=float))
    except (np.linalg.LinAlgError, SingularMatrixError):
        return False
    return True


def is_positive_definite(A) -> bool:
    return is_negative_definite(-np.asarray(A, dtype=float))
