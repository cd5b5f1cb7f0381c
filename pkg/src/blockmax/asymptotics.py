"""Asymptotic calculus for the block-maxima MLE and its competitors.

The Fisher information ``I`` of the GEV model at ``theta0 = (gamma0, 0, 1)``
and the second-order bias vector ``b(gamma0, rho)`` are available in closed
form and by quadrature of their defining integrals over ``s in (0, 1)``.
The quadrature route substitutes ``s = exp(-t)`` so that ``t`` is exactly the
``z`` variable of the model, and splits ``(0, inf)`` at ``t = 1``.

The normalized BM-MLE error is asymptotically ``N(lam I^-1 b, I^-1)``.
Variance and bias functions for the other three estimator kinds come from
:data:`REGISTRY`; each entry records where its formula comes from.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np
from scipy import special as _sp

from . import pwm
from .errors import DomainError
from .gev import SecondOrderSpec, derivatives_at_z, h_second_order
from .numerics import (
    EULER_GAMMA,
    QuadratureSpec,
    digamma_fn,
    gamma_fn,
    gamma_prime,
    integrate,
    invert3,
)

INFO_SWITCH = 1e-3
BIAS_RHO_SWITCH = 1e-3
QUAD = QuadratureSpec(abs_tol=1e-11, rel_tol=1e-11, max_subdivisions=2000)


class EstimatorKind(str, enum.Enum):
    BM_MLE = "BM-MLE"
    BM_PWM = "BM-PWM"
    POT_MLE = "POT-MLE"
    POT_PWM = "POT-PWM"

    @property
    def is_mle(self) -> bool:
        return self in (EstimatorKind.BM_MLE, EstimatorKind.POT_MLE)

    @property
    def is_bm(self) -> bool:
        return self in (EstimatorKind.BM_MLE, EstimatorKind.BM_PWM)

    @classmethod
    def parse(cls, name: str) -> "EstimatorKind":
        key = name.strip().upper().replace("_", "-")
        for kind in cls:
            if kind.value == key:
                return kind
        raise DomainError(f"unknown estimator kind {name!r}")


def _check_gamma0(gamma0: float) -> None:
    if not gamma0 > -0.5:
        raise DomainError(f"gamma0 must exceed -1/2, got {gamma0!r}")


def _half_line(f: Callable[[float], float], spec: QuadratureSpec = QUAD) -> float:
    return integrate(f, 0.0, 1.0, spec) + integrate(f, 1.0, math.inf, spec)


# --------------------------------------------------------------------------
# Fisher information

def fisher_info_closed(gamma0: float) -> np.ndarray:
    """Prescott-Walden closed form of ``I`` in (gamma, mu, sigma) order.

    Valid for ``gamma0 > -1/2`` away from the removable singularity at 0
    (``|gamma0| >= INFO_SWITCH``).
    """
    _check_gamma0(gamma0)
    if abs(gamma0) < INFO_SWITCH:
        raise DomainError(f"closed-form information is unstable for |gamma0| < {INFO_SWITCH}")
    g = gamma0
    p = (1 + g) ** 2 * gamma_fn(1 + 2 * g)
    q = (1 + g) * gamma_prime(1 + g) + (1 + 1 / g) * gamma_fn(2 + g)
    r = gamma_fn(2 + g)
    c = 1 - EULER_GAMMA
    i_gg = (math.pi**2 / 6 + (c + 1 / g) ** 2 - 2 * q / g + p / g**2) / g**2
    i_gm = -(q - p / g) / g
    i_gs = -(c - q + (1 - r + p) / g) / g**2
    i_mm = p
    i_ms = -(p - r) / g
    i_ss = (1 - 2 * r + p) / g**2
    return np.array([[i_gg, i_gm, i_gs], [i_gm, i_mm, i_ms], [i_gs, i_ms, i_ss]])


@lru_cache(maxsize=512)
def _fisher_numeric_cached(gamma0: float) -> tuple:
    out = np.empty((3, 3))
    for i in range(3):
        for j in range(i, 3):
            f = lambda t, i=i, j=j: float(derivatives_at_z(gamma0, t)[1][0, i, j]) * math.exp(-t)
            out[i, j] = out[j, i] = -_half_line(f)
    return tuple(map(tuple, out))


def fisher_info_numeric(gamma0: float) -> np.ndarray:
    """``I = -int_0^1 d2l/dtheta2 (theta0, Q(s)) ds`` by quadrature."""
    _check_gamma0(gamma0)
    return np.array(_fisher_numeric_cached(float(gamma0)))


def fisher_info_from_score(gamma0: float) -> np.ndarray:
    """``int_0^1 score (x) score (theta0, Q(s)) ds``; equals ``I`` by the information identity."""
    _check_gamma0(gamma0)
    out = np.empty((3, 3))
    for i in range(3):
        for j in range(i, 3):
            def f(t, i=i, j=j):
                sc = derivatives_at_z(gamma0, t)[0][0]
                return float(sc[i] * sc[j]) * math.exp(-t)
            out[i, j] = out[j, i] = _half_line(f)
    return out


def score_mean(gamma0: float) -> np.ndarray:
    """``int_0^1 score(theta0, Q(s)) ds``, which vanishes for gamma0 > -1/2."""
    _check_gamma0(gamma0)
    return np.array([
        _half_line(lambda t, i=i: float(derivatives_at_z(gamma0, t)[0][0, i]) * math.exp(-t))
        for i in range(3)
    ])


def fisher_info(gamma0: float, numeric: bool = False) -> tuple[np.ndarray, str]:
    """Information matrix and the route used ("closed" or "numeric")."""
    if numeric or abs(gamma0) < INFO_SWITCH:
        return fisher_info_numeric(gamma0), "numeric"
    return fisher_info_closed(gamma0), "closed"


# --------------------------------------------------------------------------
# Bias vector

def bias_vector_closed(gamma0: float, rho: float) -> np.ndarray:
    """Closed form of ``b(gamma0, rho) = (b_gamma, b_mu, b_sigma)``.

    Separate expressions for ``rho < 0`` and ``rho = 0``.  Raises
    :class:`DomainError` near the removable singularities ``gamma0 = 0`` and
    ``gamma0 + rho = 0``.
    """
    _check_gamma0(gamma0)
    if rho > 0:
        raise DomainError(f"rho must be <= 0, got {rho!r}")
    g, r = gamma0, rho
    if abs(g) < INFO_SWITCH:
        raise DomainError(f"closed-form bias is unstable for |gamma0| < {INFO_SWITCH}")
    G, Gp = gamma_fn, gamma_prime
    eg = EULER_GAMMA
    if r == 0.0:
        b_g = ((1 + g - g * eg) ** 2 + g**2 * math.pi**2 / 6 + (1 + g) ** 2 * G(1 + 2 * g)
               - 2 * (1 + g) * ((1 + g) * G(1 + g) + g * Gp(1 + g))) / g**4
        b_m = (1 + g) / g**2 * ((1 + g) * G(1 + 2 * g) - G(2 + g) - g * Gp(1 + g))
        b_s = (-1 + g * (eg - 1) - (1 + g) ** 2 * G(1 + 2 * g) + G(3 + g)
               + g * (1 + g) * Gp(1 + g)) / g**3
        return np.array([b_g, b_m, b_s])
    if abs(g + r) < BIAS_RHO_SWITCH:
        raise DomainError(f"closed-form bias is unstable for |gamma0 + rho| < {BIAS_RHO_SWITCH}")
    b_g = ((g + r) * (1 + g - eg * g)
           - (g + g**2 * (1 + r) + 2 * r * (1 + g)) * G(1 + g)
           + (1 + g) ** 2 * r * G(1 + 2 * g)
           + g**2 * G(1 - r)
           - g * (1 + g) * G(2 - r)
           + g * (1 + g) * (1 - r) * G(1 + g - r)
           - g * r * Gp(2 + g)
           - g**2 * Gp(2 - r)) / (g**3 * r * (g + r))
    b_m = (1 + g) / (g * r * (g + r)) * (-(g + r) * G(1 + g) + (1 + g) * r * G(1 + 2 * g)
                                         + g * (1 - r) * G(1 + g - r))
    b_s = (-g - r + (1 + g) * (g + 2 * r) * G(1 + g) - (1 + g) ** 2 * r * G(1 + 2 * g)
           + g * G(2 - r) - g * (1 + g) * (1 - r) * G(1 + g - r)) / (g**2 * r * (g + r))
    return np.array([b_g, b_m, b_s])


@lru_cache(maxsize=4096)
def _bias_numeric_cached(gamma0: float, rho: float) -> tuple:
    def comp(i):
        def f(t):
            mixed = derivatives_at_z(gamma0, t)[2][0, i]
            return float(mixed) * h_second_order(gamma0, rho, 1.0 / t) * math.exp(-t)
        return _half_line(f)
    return tuple(comp(i) for i in range(3))


def bias_vector_numeric(gamma0: float, rho: float) -> np.ndarray:
    """``b = int_0^1 d2l/dxdtheta (theta0, Q(s)) H(1/(-log s)) ds`` by quadrature."""
    _check_gamma0(gamma0)
    if rho > 0:
        raise DomainError(f"rho must be <= 0, got {rho!r}")
    return np.array(_bias_numeric_cached(float(gamma0), float(rho)))


def bias_vector(gamma0: float, rho: float, numeric: bool = False) -> tuple[np.ndarray, str]:
    if numeric or abs(gamma0) < INFO_SWITCH or (rho < 0 and abs(gamma0 + rho) < BIAS_RHO_SWITCH):
        return bias_vector_numeric(gamma0, rho), "numeric"
    return bias_vector_closed(gamma0, rho), "closed"


class MleAsymptotics(NamedTuple):
    variance: float
    bias: float
    full_cov: np.ndarray
    full_bias: np.ndarray
    info: np.ndarray
    b: np.ndarray
    route: str


def mle_bm_asym(spec: SecondOrderSpec, numeric: bool = False) -> MleAsymptotics:
    """Limit law ``N(lam I^-1 b, I^-1)`` of the normalized BM-MLE error.

    ``variance`` and ``bias`` are the gamma components.
    """
    info, r1 = fisher_info(spec.gamma0, numeric)
    b, r2 = bias_vector(spec.gamma0, spec.rho, numeric)
    cov = invert3(info)
    full_bias = spec.lam * (cov @ b)
    route = r1 if r1 == r2 else f"info:{r1},bias:{r2}"
    return MleAsymptotics(float(cov[0, 0]), float(full_bias[0]), cov, full_bias, info, b, route)


# --------------------------------------------------------------------------
# BM-PWM by the delta method.
#
# gamma_hat solves R(gamma) = (3 b2 - b0) / (2 b1 - b0) with b_r the empirical
# PWMs of the block maxima.  The influence function of beta_r under G_gamma is
#   IF_r(u) = Q(u) u^r + r int_u^1 Q(s) s^(r-1) ds - (r+1) beta_r,
# and the quantile-process bias lam*H(1/(-log s)) shifts beta_r by
#   lam * int_0^1 s^r H(1/(-log s)) ds.

def _qt(gamma: float, t: float) -> float:
    # Q(exp(-t)) = (t**-gamma - 1)/gamma
    return -math.log(t) if gamma == 0.0 else math.expm1(-gamma * math.log(t)) / gamma


def _upper_pwm_integral(gamma: float, r: int, T: float) -> float:
    """``int_u^1 Q(s) s^(r-1) ds`` with ``u = exp(-T)``, r >= 1."""
    if abs(gamma) >= 1e-4:
        lower_inc = r ** (gamma - 1.0) * gamma_fn(1.0 - gamma) * _sp.gammainc(1.0 - gamma, r * T)
        return (lower_inc - (-math.expm1(-r * T)) / r) / gamma
    spec = QuadratureSpec(abs_tol=1e-13, rel_tol=1e-11)
    return integrate(lambda t: _qt(gamma, t) * math.exp(-r * t), 0.0, T, spec)


def _pwm_gradient(gamma: float) -> np.ndarray:
    """d gamma_hat / d(beta0, beta1, beta2) at the standard GEV."""
    b0, b1, b2 = (pwm.gev_beta(gamma, r) for r in range(3))
    R = pwm.gev_ratio(gamma)
    den = (2 * b1 - b0) * pwm.gev_ratio_prime(gamma)
    return np.array([-1.0 + R, -2.0 * R, 3.0]) / den


def _check_pwm_range(gamma: float) -> None:
    if not gamma < 0.5:
        raise DomainError(f"PWM asymptotics require gamma < 1/2, got {gamma!r}")


@lru_cache(maxsize=1024)
def bm_pwm_variance(gamma: float) -> float:
    _check_pwm_range(gamma)
    grad = _pwm_gradient(gamma)
    betas = [pwm.gev_beta(gamma, r) for r in range(3)]

    def infl(T):
        q = _qt(gamma, T)
        i0 = q - betas[0]
        i1 = q * math.exp(-T) + _upper_pwm_integral(gamma, 1, T) - 2 * betas[1]
        i2 = q * math.exp(-2 * T) + 2 * _upper_pwm_integral(gamma, 2, T) - 3 * betas[2]
        return grad[0] * i0 + grad[1] * i1 + grad[2] * i2

    spec = QuadratureSpec(abs_tol=1e-10, rel_tol=1e-9)
    return _half_line(lambda T: infl(T) ** 2 * math.exp(-T), spec)


def _laplace_boxcox(a: float, c: float) -> float:
    # int_0^inf exp(-c t) (t**-a - 1)/a dt, a < 1
    return (gamma_fn(1.0 - a) * c ** (a - 1.0) - 1.0 / c) / a


def bm_pwm_bias_numeric(gamma: float, rho: float) -> float:
    _check_pwm_range(gamma)
    grad = _pwm_gradient(gamma)
    shifts = [
        _half_line(lambda t, r=r: math.exp(-(r + 1) * t) * h_second_order(gamma, rho, 1.0 / t))
        for r in range(3)
    ]
    return float(grad @ np.array(shifts))


@lru_cache(maxsize=8192)
def bm_pwm_bias(gamma: float, rho: float) -> float:
    """Asymptotic BM-PWM bias for lam = 1.

    The PWM shifts ``int_0^inf exp(-(r+1) t) H(1/t) dt`` are Laplace
    transforms of Box-Cox terms and have a closed form away from
    ``gamma = 0``, ``gamma + rho = 0`` and ``rho = 0``.
    """
    _check_pwm_range(gamma)
    if min(abs(gamma), abs(gamma + rho), abs(rho)) < BIAS_RHO_SWITCH:
        return bm_pwm_bias_numeric(gamma, rho)
    shifts = np.array([
        (_laplace_boxcox(gamma + rho, r + 1.0) - _laplace_boxcox(gamma, r + 1.0)) / rho
        for r in range(3)
    ])
    return float(_pwm_gradient(gamma) @ shifts)


def pot_mle_variance(gamma: float) -> float:
    return (1.0 + gamma) ** 2


def pot_mle_bias(gamma: float, rho: float) -> float:
    return (1.0 + gamma) / ((1.0 - rho) * (1.0 + gamma - rho))


def pot_pwm_variance(gamma: float) -> float:
    _check_pwm_range(gamma)
    g = gamma
    return (1 - g) * (2 - g) ** 2 * (1 - g + 2 * g * g) / ((1 - 2 * g) * (3 - 2 * g))


def pot_pwm_bias(gamma: float, rho: float) -> float:
    _check_pwm_range(gamma)
    g = gamma
    return (1 - g) * (2 - g) / ((1 - g - rho) * (2 - g - rho))


@dataclass(frozen=True)
class RegistryEntry:
    kind: EstimatorKind
    variance: Callable[[float], float]
    bias: Callable[[float, float], float]
    gamma_min: float
    gamma_max: float
    provenance: str

    def check(self, gamma: float) -> None:
        if not (self.gamma_min < gamma < self.gamma_max):
            raise DomainError(
                f"{self.kind.value} asymptotics need {self.gamma_min} < gamma < {self.gamma_max}, got {gamma!r}"
            )


def _bm_mle_variance(gamma: float) -> float:
    return mle_bm_asym(SecondOrderSpec(gamma, 0.0, 0.0)).variance


def _bm_mle_bias(gamma: float, rho: float) -> float:
    return mle_bm_asym(SecondOrderSpec(gamma, rho, 1.0)).bias


REGISTRY: dict[EstimatorKind, RegistryEntry] = {
    EstimatorKind.BM_MLE: RegistryEntry(
        EstimatorKind.BM_MLE, _bm_mle_variance, _bm_mle_bias, -0.5, math.inf,
        "gamma component of N(lam I^-1 b, I^-1); I and b from the GEV likelihood",
    ),
    EstimatorKind.BM_PWM: RegistryEntry(
        EstimatorKind.BM_PWM, bm_pwm_variance, bm_pwm_bias, -math.inf, 0.5,
        "delta method on the unbiased GEV PWM estimator (Hosking, Wallis & Wood 1985): "
        "variance by quadrature of the squared influence function, bias in closed form "
        "from the block-maxima quantile-process bias lam*H(1/(-log s))",
    ),
    EstimatorKind.POT_MLE: RegistryEntry(
        EstimatorKind.POT_MLE, pot_mle_variance, pot_mle_bias, -0.5, math.inf,
        "standard GPD maximum-likelihood asymptotics for the top-k excesses: "
        "var (1+g)^2, bias (1+g)/((1-rho)(1+g-rho))",
    ),
    EstimatorKind.POT_PWM: RegistryEntry(
        EstimatorKind.POT_PWM, pot_pwm_variance, pot_pwm_bias, -math.inf, 0.5,
        "GPD PWM estimator (Hosking & Wallis 1987) under the standard POT second-order expansion: "
        "var (1-g)(2-g)^2(1-g+2g^2)/((1-2g)(3-2g)), bias (1-g)(2-g)/((1-g-rho)(2-g-rho))",
    ),
}


def estimator_asym(kind: EstimatorKind | str, spec: SecondOrderSpec) -> tuple[float, float]:
    """Asymptotic ``(variance, bias)`` of ``sqrt(k) (gamma_hat - gamma0)``; bias is lam-scaled."""
    kind = EstimatorKind.parse(kind) if isinstance(kind, str) else kind
    if kind is EstimatorKind.BM_MLE:
        res = mle_bm_asym(spec)
        return res.variance, res.bias
    entry = REGISTRY[kind]
    entry.check(spec.gamma0)
    return float(entry.variance(spec.gamma0)), float(spec.lam * entry.bias(spec.gamma0, spec.rho))
