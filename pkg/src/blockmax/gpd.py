"""Generalized Pareto model for threshold excesses.

The log-density of GPD(gamma, sigma) at an excess ``y`` is

    -log(sigma) - (1 + gamma) * L,   L = log(1 + gamma*y/sigma) / gamma,

so ``L`` and its gamma-derivatives are shared with the GEV module, including
the power-series branch near ``gamma*y/sigma = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .gev import _boxcox, _lfun, _scalarize


@dataclass(frozen=True)
class GpdParams:
    gamma: float
    sigma: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.gamma) and self.sigma > 0 and np.isfinite(self.sigma)):
            raise DomainError(f"invalid GPD parameters {self!r}")


def _in_support(p: GpdParams, t: np.ndarray) -> np.ndarray:
    return np.isfinite(t) & (t >= 0) & (1.0 + p.gamma * t > 0)


def gpd_loglik(params: GpdParams, y):
    """Log-density; ``-inf`` outside ``{y >= 0, 1 + gamma*y/sigma > 0}``."""
    t = np.atleast_1d(np.asarray(y, dtype=float)) / params.sigma
    out = np.full(t.shape, -np.inf)
    ok = _in_support(params, t)
    if np.any(ok):
        _, L, _, _ = _lfun(params.gamma, t[ok])
        out[ok] = -np.log(params.sigma) - (1.0 + params.gamma) * L
    return _scalarize(out if np.ndim(y) else out[0], y)


def gpd_pdf(params: GpdParams, y):
    return np.exp(gpd_loglik(params, y))


def gpd_cdf(params: GpdParams, y):
    t = np.atleast_1d(np.asarray(y, dtype=float)) / params.sigma
    out = np.where(t < 0, 0.0, 1.0)
    ok = _in_support(params, t)
    if np.any(ok):
        _, L, _, _ = _lfun(params.gamma, t[ok])
        out[ok] = -np.expm1(-L)
    return _scalarize(out if np.ndim(y) else out[0], y)


def gpd_quantile(params: GpdParams, s):
    """``sigma * ((1-s)**(-gamma) - 1) / gamma``."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(~((s_arr > 0) & (s_arr < 1))):
        raise DomainError("gpd_quantile requires s in (0, 1)")
    lt = -np.log1p(-s_arr)
    return _scalarize(params.sigma * _boxcox(params.gamma, lt), s)


def _derivs(params: GpdParams, y: np.ndarray):
    t = y / params.sigma
    if not np.all(_in_support(params, t)):
        raise DomainError("excess outside the GPD support")
    g, s = params.gamma, params.sigma
    w, L, Lg, Lgg = _lfun(g, t)
    sc = np.stack([-L - (1 + g) * Lg, (-1.0 + (1 + g) * t / w) / s], axis=-1)
    h = np.empty(t.shape + (2, 2))
    h[..., 0, 0] = -2.0 * Lg - (1 + g) * Lgg
    h[..., 0, 1] = h[..., 1, 0] = (t / w - (1 + g) * t**2 / w**2) / s
    h[..., 1, 1] = (1.0 - (1 + g) * t / w**2 - (1 + g) * t / w) / s**2
    return sc, h


def gpd_score(params: GpdParams, y) -> np.ndarray:
    """Gradient of :func:`gpd_loglik` in ``(gamma, sigma)``; shape (2,) or (n, 2)."""
    sc, _ = _derivs(params, np.atleast_1d(np.asarray(y, dtype=float)))
    return sc if np.ndim(y) else sc[0]


def gpd_hessian(params: GpdParams, y) -> np.ndarray:
    _, h = _derivs(params, np.atleast_1d(np.asarray(y, dtype=float)))
    return h if np.ndim(y) else h[0]
