"""Probability-weighted-moment relations for the GEV and GPD models.

Both the estimators and their asymptotic variances need the same
population relations, so they live here.
"""

from __future__ import annotations

import math

import numpy as np

from .numerics import EULER_GAMMA, gamma_fn

_LN2 = math.log(2.0)
_LN3 = math.log(3.0)


def gev_beta(gamma: float, r: int) -> float:
    """``beta_r = E[X G(X)**r]`` for standard GEV(gamma, 0, 1), gamma < 1."""
    c = r + 1.0
    if gamma == 0.0:
        return (EULER_GAMMA + math.log(c)) / c
    return (gamma_fn(1.0 - gamma) * c**gamma - 1.0) / (gamma * c)


def gev_ratio(gamma: float) -> float:
    """``(3**gamma - 1) / (2**gamma - 1)``, continuous at 0 with value log 3 / log 2."""
    if abs(gamma) < 1e-8:
        return _LN3 / _LN2 * (1.0 + 0.5 * (_LN3 - _LN2) * gamma)
    return math.expm1(gamma * _LN3) / math.expm1(gamma * _LN2)


def gev_ratio_prime(gamma: float) -> float:
    a, b = _LN2, _LN3
    if abs(gamma) < 1e-4:
        # second-order Taylor of the ratio
        c2 = b * b / 6.0 - a * b / 4.0 + a * a / 12.0
        return b / a * (0.5 * (b - a) + 2.0 * c2 * gamma)
    ea, eb = math.expm1(gamma * a), math.expm1(gamma * b)
    return (b * (eb + 1.0) * ea - a * eb * (ea + 1.0)) / ea**2


def gev_scale_factor(gamma: float) -> float:
    """``(2**gamma - 1) Gamma(1 - gamma) / gamma``, so that ``2 b1 - b0 = sigma * factor``."""
    if abs(gamma) < 1e-8:
        return _LN2 * (1.0 + gamma * (0.5 * _LN2 + EULER_GAMMA))
    return math.expm1(gamma * _LN2) * gamma_fn(1.0 - gamma) / gamma


def gev_location_offset(gamma: float) -> float:
    """``(Gamma(1 - gamma) - 1) / gamma``, so that ``b0 = mu + sigma * offset``."""
    if abs(gamma) < 1e-6:
        # Gamma(1-g) = 1 + euler*g + (euler^2/2 + pi^2/12) g^2 + ...
        return EULER_GAMMA + (0.5 * EULER_GAMMA**2 + math.pi**2 / 12.0) * gamma
    return (gamma_fn(1.0 - gamma) - 1.0) / gamma


def solve_gev_ratio(target: float, lo: float = -20.0, hi: float = 20.0) -> float:
    """Invert :func:`gev_ratio`; it increases from 1 (gamma -> -inf) to +inf."""
    from scipy.optimize import brentq

    if not target > 1.0:
        raise ValueError(f"PWM ratio {target!r} has no GEV solution (must exceed 1)")
    f = lambda g: gev_ratio(g) - target
    while f(hi) < 0:
        hi *= 2.0
        if hi > 1e3:
            raise ValueError("PWM ratio too large to invert")
    while f(lo) > 0:
        lo *= 2.0
        if lo < -1e3:
            raise ValueError("PWM ratio too close to 1 to invert")
    return float(brentq(f, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200))


def gpd_pwm_params(a0: float, a1: float) -> tuple[float, float]:
    """Hosking-Wallis relations: ``(gamma, sigma)`` from ``a_r = E[Y (1-F(Y))**r]``."""
    d = a0 - 2.0 * a1
    return 2.0 - a0 / d, 2.0 * a0 * a1 / d
