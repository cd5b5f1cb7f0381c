"""The three-parameter GEV model and the derivatives of its log-likelihood.

Everything is expressed through the standardized variable
``y = (x - mu) / sigma`` and ``L = log(1 + gamma*y) / gamma``, so that
``z = exp(-L) = (1 + gamma*y)**(-1/gamma)`` and

    g(gamma, y) = (1 + gamma) * log(z) - z = -(1 + gamma) * L - exp(-L).

``L`` and its gamma-derivatives have removable singularities at
``gamma*y = 0``; below ``|gamma*y| < SERIES_SWITCH`` they are evaluated
from their power series in ``u = gamma*y`` instead of the closed forms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

SERIES_SWITCH = 0.05
_N_SERIES = 16


@dataclass(frozen=True)
class GevParams:
    gamma: float
    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError(f"sigma must be positive, got {self.sigma!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.gamma, self.mu, self.sigma])


@dataclass(frozen=True)
class SecondOrderSpec:
    gamma0: float
    rho: float
    lam: float = 0.0

    def __post_init__(self):
        if not self.gamma0 > -0.5:
            raise DomainError(f"gamma0 must exceed -1/2, got {self.gamma0!r}")
        if not self.rho <= 0:
            raise DomainError(f"rho must be <= 0, got {self.rho!r}")


# series coefficients in u = gamma*y:
#   L     = y    * sum_{n>=1} (-1)^(n+1) u^(n-1) / n
#   L_g   = y**2 * sum_{n>=2} (-1)^(n+1) (n-1) u^(n-2) / n
#   L_gg  = y**3 * sum_{n>=3} (-1)^(n+1) (n-1)(n-2) u^(n-3) / n
_n = np.arange(1, _N_SERIES + 4, dtype=float)
_sgn = np.where(_n % 2 == 1, 1.0, -1.0)
_C0 = (_sgn / _n)[:_N_SERIES][::-1]
_C1 = (_sgn * (_n - 1) / _n)[1:_N_SERIES + 1][::-1]
_C2 = (_sgn * (_n - 1) * (_n - 2) / _n)[2:_N_SERIES + 2][::-1]


def _lfun(gamma: float, y: np.ndarray, w=None, L=None):
    """Return ``(w, L, L_g, L_gg)`` for ``w = 1 + gamma*y > 0`` (unchecked).

    ``w`` and ``L`` may be supplied when they are known more accurately than
    ``1 + gamma*y`` (e.g. when starting from ``z``).
    """
    u = gamma * y
    if w is None:
        w = 1.0 + u
    small = np.abs(u) < SERIES_SWITCH
    Lg = np.empty_like(y)
    Lgg = np.empty_like(y)
    if L is None:
        L = np.empty_like(y)
        if np.any(small):
            L[small] = y[small] * np.polyval(_C0, u[small])
        if not np.all(small):
            L[~small] = np.log1p(u[~small]) / gamma
    if np.any(small):
        us, ys = u[small], y[small]
        Lg[small] = ys**2 * np.polyval(_C1, us)
        Lgg[small] = ys**3 * np.polyval(_C2, us)
    big = ~small
    if np.any(big):
        yb, wb, Lb = y[big], w[big], L[big]
        Lgb = (yb / wb - Lb) / gamma
        Lg[big] = Lgb
        Lgg[big] = -((yb / wb) ** 2 + 2.0 * Lgb) / gamma
    return w, L, Lg, Lgg


def _standardize(theta: GevParams, x):
    x = np.asarray(x, dtype=float)
    return (x - theta.mu) / theta.sigma


def _in_support(gamma: float, y: np.ndarray) -> np.ndarray:
    return np.isfinite(y) & (1.0 + gamma * y > 0)


def _check_support(gamma: float, y: np.ndarray) -> None:
    if not np.all(_in_support(gamma, y)):
        raise DomainError("x outside the open support of the GEV distribution")


def _scalarize(a, like):
    return float(a) if np.ndim(like) == 0 else a


def g_loglik(gamma: float, x):
    """Standard GEV log-density ``g_gamma(x)``; ``-inf`` outside the support."""
    y = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.full(y.shape, -np.inf)
    ok = _in_support(gamma, y)
    if np.any(ok):
        _, L, _, _ = _lfun(gamma, y[ok])
        out[ok] = -(1.0 + gamma) * L - np.exp(-L)
    return _scalarize(out if np.ndim(x) else out[0], x)


def loglik(theta: GevParams, x):
    return g_loglik(theta.gamma, _standardize(theta, x)) - np.log(theta.sigma)


def z_transform(theta: GevParams, x):
    """``z = (1 + gamma*(x - mu)/sigma)**(-1/gamma)``; ``exp(-(x-mu)/sigma)`` at gamma=0."""
    y = np.atleast_1d(_standardize(theta, x))
    _check_support(theta.gamma, y)
    _, L, _, _ = _lfun(theta.gamma, y)
    z = np.exp(-L)
    return _scalarize(z if np.ndim(x) else z[0], x)


def quantile(gamma0: float, s):
    """Quantile function ``((-log s)**(-gamma0) - 1) / gamma0`` of G_gamma0."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(~((s_arr > 0) & (s_arr < 1))):
        raise DomainError("quantile requires s in (0, 1)")
    t = np.log(-np.log(s_arr))
    q = -_boxcox(-gamma0, t)
    return _scalarize(q, s)


def _boxcox(a: float, logx):
    """``(exp(a*logx) - 1) / a``, equal to ``logx`` at a = 0."""
    logx = np.asarray(logx, dtype=float)
    if a == 0.0:
        return logx.copy() if logx.ndim else float(logx)
    u = a * logx
    # expm1(u)/a underflows for subnormal a; two series terms are exact there
    out = np.where(np.abs(u) < 1e-8, logx * (1.0 + 0.5 * u), np.expm1(u) / a)
    return out if out.ndim else float(out)


def cdf(theta: GevParams, x):
    y = np.atleast_1d(_standardize(theta, x))
    ok = _in_support(theta.gamma, y)
    # outside the support the cdf is 0 (below a lower endpoint) or 1 (above an upper one)
    out = np.where(theta.gamma > 0, 0.0, 1.0) * np.ones_like(y)
    if np.any(ok):
        _, L, _, _ = _lfun(theta.gamma, y[ok])
        out[ok] = np.exp(-np.exp(-L))
    return _scalarize(out if np.ndim(x) else out[0], x)


def pdf(theta: GevParams, x):
    y = np.atleast_1d(_standardize(theta, x))
    ok = _in_support(theta.gamma, y)
    out = np.zeros_like(y)
    if np.any(ok):
        _, L, _, _ = _lfun(theta.gamma, y[ok])
        with np.errstate(over="ignore"):
            out[ok] = np.exp(-(1.0 + theta.gamma) * L - np.exp(-L)) / theta.sigma
    return _scalarize(out if np.ndim(x) else out[0], x)


def _g_derivs(gamma: float, y: np.ndarray, w=None, L=None):
    """Partial derivatives of g(gamma, y) up to order two (inputs in support)."""
    w, L, Lg, Lgg = _lfun(gamma, y, w, L)
    z = np.exp(-L)
    Ly = 1.0 / w
    Lgy = -y / w**2
    Lyy = -gamma / w**2
    c = z - 1.0 - gamma
    g_g = c * Lg - L
    g_y = c * Ly
    g_gg = c * Lgg - z * Lg**2 - 2.0 * Lg
    g_gy = c * Lgy - z * Lg * Ly - Ly
    g_yy = c * Lyy - z * Ly**2
    return g_g, g_y, g_gg, g_gy, g_yy


def _score_hess_arrays(gamma: float, mu: float, sigma: float, x: np.ndarray):
    """Vectorized score (n, 3) and Hessian (n, 3, 3) in (gamma, mu, sigma)."""
    y = (x - mu) / sigma
    g_g, g_y, g_gg, g_gy, g_yy = _g_derivs(gamma, y)
    s = sigma
    score = np.stack([g_g, -g_y / s, -(y * g_y + 1.0) / s], axis=-1)
    h = np.empty(y.shape + (3, 3))
    h[..., 0, 0] = g_gg
    h[..., 0, 1] = h[..., 1, 0] = -g_gy / s
    h[..., 0, 2] = h[..., 2, 0] = -y * g_gy / s
    h[..., 1, 1] = g_yy / s**2
    h[..., 1, 2] = h[..., 2, 1] = (g_y + y * g_yy) / s**2
    h[..., 2, 2] = (2.0 * y * g_y + y**2 * g_yy + 1.0) / s**2
    return score, h


def derivatives_at_z(gamma0: float, z):
    """Score, Hessian and mixed x-derivative at ``theta0 = (gamma0, 0, 1)``,
    evaluated at the point ``x`` with ``z(theta0, x) = z``.

    Starting from ``z`` keeps ``1 + gamma0*x = z**(-gamma0)`` exact near a
    finite endpoint, which is where quadrature over ``s = exp(-z)`` would
    otherwise round ``Q(s)`` onto the boundary.  Returns arrays of shapes
    ``(n, 3)``, ``(n, 3, 3)`` and ``(n, 3)``.
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(~(z > 0)):
        raise DomainError("z must be positive")
    lz = np.log(z)
    y = -_boxcox(-gamma0, lz)
    w = np.exp(-gamma0 * lz)
    g_g, g_y, g_gg, g_gy, g_yy = _g_derivs(gamma0, y, w, -lz)
    sc = np.stack([g_g, -g_y, -(y * g_y + 1.0)], axis=-1)
    h = np.empty(y.shape + (3, 3))
    h[:, 0, 0] = g_gg
    h[:, 0, 1] = h[:, 1, 0] = -g_gy
    h[:, 0, 2] = h[:, 2, 0] = -y * g_gy
    h[:, 1, 1] = g_yy
    h[:, 1, 2] = h[:, 2, 1] = g_y + y * g_yy
    h[:, 2, 2] = 2.0 * y * g_y + y**2 * g_yy + 1.0
    mixed = np.stack([g_gy, -g_yy, -(g_y + y * g_yy)], axis=-1)
    return sc, h, mixed


def _prep(theta: GevParams, x):
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    _check_support(theta.gamma, (xa - theta.mu) / theta.sigma)
    return xa


def score(theta: GevParams, x) -> np.ndarray:
    """Gradient of ``loglik`` in ``(gamma, mu, sigma)``.

    Returns shape ``(3,)`` for scalar ``x`` and ``(n, 3)`` otherwise.
    Raises :class:`DomainError` unless every ``x`` is strictly inside the support.
    """
    xa = _prep(theta, x)
    sc, _ = _score_hess_arrays(theta.gamma, theta.mu, theta.sigma, xa)
    return sc if np.ndim(x) else sc[0]


def hessian(theta: GevParams, x) -> np.ndarray:
    """Second derivatives of ``loglik`` in ``(gamma, mu, sigma)``, shape (3, 3) per point."""
    xa = _prep(theta, x)
    _, h = _score_hess_arrays(theta.gamma, theta.mu, theta.sigma, xa)
    return h if np.ndim(x) else h[0]


def mixed_dx_dtheta(theta: GevParams, x) -> np.ndarray:
    """``d^2 loglik / dx dtheta`` in the order (gamma, mu, sigma)."""
    xa = _prep(theta, x)
    s = theta.sigma
    y = (xa - theta.mu) / s
    _, g_y, _, g_gy, g_yy = _g_derivs(theta.gamma, y)
    out = np.stack([g_gy / s, -g_yy / s**2, -(g_y + y * g_yy) / s**2], axis=-1)
    return out if np.ndim(x) else out[0]


def dloglik_dx(theta: GevParams, x):
    xa = _prep(theta, x)
    y = (xa - theta.mu) / theta.sigma
    _, g_y, _, _, _ = _g_derivs(theta.gamma, y)
    return _scalarize(g_y / theta.sigma if np.ndim(x) else g_y[0] / theta.sigma, x)


def _boxcox_derivs(a: float, logx: float):
    """``E(a) = (x**a - 1)/a`` and its first two derivatives in ``a``."""
    u = a * logx
    if abs(u) < 0.5:
        n = np.arange(0, 30, dtype=float)
        fact = np.cumprod(np.concatenate([[1.0], np.arange(1, 31, dtype=float)]))
        pw = u ** n
        # E = l sum u^n/(n+1)!, E_a = l^2 sum n u^(n-1)/(n+1)!, E_aa = l^3 sum n(n-1) u^(n-2)/(n+1)!
        E = logx * np.sum(pw / fact[1:31])
        Ea = logx**2 * np.sum((n[1:] * pw[:-1]) / fact[2:31])
        Eaa = logx**3 * np.sum((n[2:] * (n[2:] - 1) * pw[:-2]) / fact[3:31])
        return E, Ea, Eaa
    ex = np.exp(u)
    E = np.expm1(u) / a
    Ea = (logx * ex - E) / a
    Eaa = (logx**2 * ex - 2.0 * Ea) / a
    return E, Ea, Eaa


def h_second_order(gamma0: float, rho: float, x: float) -> float:
    """The second-order limit function

        H(x) = int_1^x s**(gamma0-1) int_1^s u**(rho-1) du ds,

    evaluated in closed form on its four branches (``rho < 0`` with
    ``gamma0 + rho`` nonzero or zero; ``rho = 0`` with ``gamma0`` nonzero
    or zero).
    """
    if rho > 0:
        raise DomainError(f"rho must be <= 0, got {rho!r}")
    if not x > 0:
        raise DomainError(f"x must be positive, got {x!r}")
    lx = float(np.log(x))
    if rho == 0.0:
        if gamma0 == 0.0:
            return 0.5 * lx * lx
        return float(_boxcox_derivs(gamma0, lx)[1])
    if abs(rho) < 1e-5:
        # (E(gamma0+rho) - E(gamma0))/rho loses ~|1/rho| digits; Taylor in rho instead
        _, Ea, Eaa = _boxcox_derivs(gamma0, lx)
        return float(Ea + 0.5 * rho * Eaa)
    if gamma0 + rho == 0.0:
        return float((lx - _boxcox_derivs(gamma0, lx)[0]) / rho)
    return float((_boxcox_derivs(gamma0 + rho, lx)[0] - _boxcox_derivs(gamma0, lx)[0]) / rho)
