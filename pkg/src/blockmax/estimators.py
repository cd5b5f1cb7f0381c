"""Estimators of the extreme value index: BM-MLE, BM-PWM, POT-MLE and POT-PWM.

Both maximum likelihood fits run a safeguarded Newton-Raphson iteration in
an unconstrained parameterization (``log sigma`` instead of ``sigma``):

* the Newton direction solves ``H d = -S`` when the observed Hessian ``H`` is
  negative definite, and falls back to steepest ascent ``d = S/k`` otherwise;
* the step is halved (at most ``SolverConfig.max_halvings`` times) until every
  observation lies in the support and the log-likelihood does not decrease;
* convergence requires ``max|S|/k <= tol_score`` together with a negative
  definite ``H`` at the terminal point.

PWM estimates seed the iteration.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import pwm
from .errors import DomainError, SingularMatrixError
from .gev import GevParams, _in_support, _score_hess_arrays, g_loglik
from .gpd import GpdParams, _derivs as _gpd_derivs, gpd_loglik
from .numerics import invert3, is_negative_definite, solve3
from .sampling import BlockMaximaSample, ExcessSample

log = logging.getLogger(__name__)

MIN_MLE_K = 10
GAMMA_FLOOR = -0.99


class LineSearch(str, enum.Enum):
    HALVING = "halving"
    NONE = "none"


@dataclass(frozen=True)
class SolverConfig:
    tol_score: float = 1e-8
    max_iter: int = 100
    line_search: LineSearch = LineSearch.HALVING
    init: Optional[tuple] = None
    """User-supplied start in natural units; ``None`` means PWM."""
    max_halvings: int = 40

    def __post_init__(self):
        if not self.tol_score > 0:
            raise DomainError("tol_score must be positive")
        if self.max_iter < 1:
            raise DomainError("max_iter must be >= 1")
        object.__setattr__(self, "line_search", LineSearch(self.line_search))


@dataclass(frozen=True)
class FitResult:
    method: str
    params: GevParams | GpdParams | None
    k: int
    converged: bool
    iterations: int = 0
    final_score_norm: float = math.nan
    observed_hessian: Optional[np.ndarray] = None
    neg_definite: bool = False
    std_errors: tuple = ()
    loglik: float = math.nan
    out_of_theory: bool = False
    message: str = ""
    extras: dict = field(default_factory=dict)

    @property
    def gamma(self) -> float:
        return math.nan if self.params is None else self.params.gamma


def _out_of_theory(method: str, gamma: float) -> bool:
    if method.endswith("mle"):
        return not gamma > -0.5
    return not gamma < 0.5


# --------------------------------------------------------------------------
# Newton engine

_Objective = Callable[[np.ndarray], Optional[tuple]]


@dataclass
class _NewtonOutcome:
    eta: np.ndarray
    ll: float
    score: np.ndarray
    hess: np.ndarray
    iterations: int
    converged: bool
    neg_definite: bool
    score_norm: float
    message: str


def _newton(objective: _Objective, eta0: np.ndarray, k: int, cfg: SolverConfig) -> _NewtonOutcome:
    eta = np.array(eta0, dtype=float)
    cur = objective(eta)
    if cur is None:
        return _NewtonOutcome(eta, -math.inf, np.full(eta.size, np.nan), np.full((eta.size,) * 2, np.nan),
                              0, False, False, math.inf, "initial point outside the support")
    ll, S, H = cur
    msg = "maximum number of iterations reached"
    it = 0
    while True:
        nd = is_negative_definite(H) if H.shape == (3, 3) else _nd2(H)
        snorm = float(np.max(np.abs(S))) / k
        if snorm <= cfg.tol_score and nd:
            return _NewtonOutcome(eta, ll, S, H, it, True, True, snorm, "converged")
        if it >= cfg.max_iter:
            break
        it += 1
        direction = None
        if nd:
            try:
                direction = solve3(H, -S) if H.shape == (3, 3) else np.linalg.solve(H, -S)
            except (SingularMatrixError, np.linalg.LinAlgError):
                direction = None
        if direction is None:
            direction = S / k
        # near the optimum the likelihood is flat to rounding; allow that much slack
        slack = 1e-12 * (1.0 + abs(ll))
        step, accepted = 1.0, None
        for _ in range(cfg.max_halvings + 1):
            cand = eta + step * direction
            res = objective(cand)
            if res is not None and res[0] >= ll - slack:
                accepted = (cand, res)
                break
            if cfg.line_search is LineSearch.NONE:
                break
            step *= 0.5
        if accepted is None:
            msg = "line search failed to find an admissible ascent step"
            break
        eta, (ll, S, H) = accepted
        if eta[0] < GAMMA_FLOOR:
            msg = f"trajectory entered gamma < {GAMMA_FLOOR}"
            break
    nd = is_negative_definite(H) if H.shape == (3, 3) else _nd2(H)
    return _NewtonOutcome(eta, ll, S, H, it, False, nd, float(np.max(np.abs(S))) / k, msg)


def _nd2(H: np.ndarray) -> bool:
    return bool(np.all(np.isfinite(H)) and H[0, 0] < 0 and np.linalg.det(H) > 0)


def _std_errors(h_nat: np.ndarray) -> tuple:
    try:
        cov = invert3(-h_nat) if h_nat.shape == (3, 3) else np.linalg.inv(-h_nat)
    except (SingularMatrixError, np.linalg.LinAlgError):
        return tuple([math.nan] * h_nat.shape[0])
    d = np.diag(cov)
    return tuple(float(math.sqrt(v)) if v > 0 else math.nan for v in d)


# --------------------------------------------------------------------------
# Block maxima

def _pwm_moments(sorted_x: np.ndarray, rmax: int) -> list[float]:
    """Unbiased PWM estimators ``b_r`` from ascending order statistics."""
    k = sorted_x.size
    j = np.arange(k, dtype=float)  # j-1 for 1-based ranks
    out, w = [], np.ones(k)
    for r in range(rmax + 1):
        if r:
            w = w * (j - (r - 1)) / (k - r)
        out.append(float(np.dot(w, sorted_x) / k))
    return out


def _bm_pwm_params(sample: BlockMaximaSample) -> GevParams:
    if sample.num_blocks < 4:
        raise DomainError("BM-PWM needs at least 4 block maxima")
    b0, b1, b2 = _pwm_moments(sample.sorted_maxima, 2)
    den = 2.0 * b1 - b0
    if not den > 0:
        raise DomainError("degenerate probability weighted moments (2 b1 - b0 <= 0)")
    try:
        g = pwm.solve_gev_ratio((3.0 * b2 - b0) / den)
    except ValueError as exc:
        raise DomainError(str(exc)) from None
    if not g < 1.0:
        raise DomainError(f"PWM shape estimate {g:.4g} >= 1 has no finite mean")
    sigma = den / pwm.gev_scale_factor(g)
    mu = b0 - sigma * pwm.gev_location_offset(g)
    return GevParams(g, mu, sigma)


def fit_bm_pwm(sample: BlockMaximaSample, with_std_errors: bool = False) -> FitResult:
    """GEV probability-weighted-moment estimator (Hosking, Wallis and Wood).

    With ``with_std_errors`` the gamma standard error comes from the
    asymptotic BM-PWM variance at the estimate; the others are not available.
    """
    k = sample.num_blocks
    try:
        p = _bm_pwm_params(sample)
    except DomainError as exc:
        return FitResult("bm-pwm", None, k, False, message=str(exc))
    se = (math.nan,) * 3
    if with_std_errors and p.gamma < 0.5:
        from .asymptotics import bm_pwm_variance

        se = (math.sqrt(bm_pwm_variance(p.gamma) / k), math.nan, math.nan)
    ll = float(np.sum(g_loglik(p.gamma, (sample.maxima - p.mu) / p.sigma)) - k * math.log(p.sigma))
    return FitResult("bm-pwm", p, k, True, std_errors=se, loglik=ll,
                     out_of_theory=_out_of_theory("bm-pwm", p.gamma), message="ok")


def _fallback_start(x: np.ndarray) -> GevParams:
    q25, q50, q75 = np.quantile(x, [0.25, 0.5, 0.75])
    # Gumbel: median = mu + sigma*(-log log 2), IQR = 1.5725 sigma
    sigma = (q75 - q25) / 1.5725
    if not sigma > 0:
        raise DomainError("sample has no spread")
    return GevParams(0.1, q50 + sigma * math.log(math.log(2.0)), sigma)


def _into_support(p: GevParams, x: np.ndarray) -> GevParams:
    g = p.gamma
    for _ in range(60):
        if np.all(_in_support(g, (x - p.mu) / p.sigma)):
            return GevParams(g, p.mu, p.sigma)
        g *= 0.5
    return GevParams(0.0, p.mu, p.sigma)


def _bm_objective(x: np.ndarray):
    def f(eta):
        g, mu, ls = eta
        s = math.exp(ls)
        y = (x - mu) / s
        if not np.all(_in_support(g, y)):
            return None
        ll = float(np.sum(g_loglik(g, y)) - x.size * ls)
        if not math.isfinite(ll):
            return None
        sc, h = _score_hess_arrays(g, mu, s, x)
        S = sc.sum(axis=0)
        H = h.sum(axis=0)
        # chain rule for eta = log sigma
        J = np.array([1.0, 1.0, s])
        Hn = H * np.outer(J, J)
        Hn[2, 2] += s * S[2]
        return ll, S * J, Hn
    return f


def fit_bm_mle(sample: BlockMaximaSample, config: SolverConfig = SolverConfig()) -> FitResult:
    """GEV maximum likelihood on block maxima."""
    k = sample.num_blocks
    if k < MIN_MLE_K:
        raise DomainError(f"BM-MLE needs at least {MIN_MLE_K} blocks, got {k}")
    x = np.asarray(sample.maxima, dtype=float)
    if config.init is not None:
        start = GevParams(*config.init)
    else:
        try:
            start = _bm_pwm_params(sample)
        except DomainError:
            try:
                start = _fallback_start(x)
            except DomainError as exc:
                return FitResult("bm-mle", None, k, False, message=str(exc))
    fixed = _into_support(start, x)
    if config.init is not None and fixed != start:
        log.info("start %s outside the support; shape shrunk to %.6g", start, fixed.gamma)
    start = fixed
    out = _newton(_bm_objective(x), np.array([start.gamma, start.mu, math.log(start.sigma)]), k, config)
    g, mu, ls = out.eta
    p = GevParams(float(g), float(mu), float(math.exp(ls)))
    h_nat = np.full((3, 3), np.nan)
    se = (math.nan,) * 3
    if math.isfinite(out.ll):
        _, h = _score_hess_arrays(p.gamma, p.mu, p.sigma, x)
        h_nat = h.sum(axis=0)
        se = _std_errors(h_nat)
    if not out.converged:
        log.info("BM-MLE did not converge: %s", out.message)
    return FitResult("bm-mle", p, k, out.converged, out.iterations, out.score_norm, h_nat,
                     out.neg_definite, se, out.ll, _out_of_theory("bm-mle", p.gamma), out.message)


# --------------------------------------------------------------------------
# Peaks over threshold

def _pot_pwm_params(sample: ExcessSample) -> GpdParams:
    k = sample.k
    if k < 2:
        raise DomainError("POT-PWM needs at least 2 excesses")
    y = np.sort(np.asarray(sample.excesses, dtype=float))
    a0 = float(np.mean(y))
    a1 = float(np.dot((k - 1.0 - np.arange(k)) / (k - 1.0), y) / k)
    if not (a0 - 2.0 * a1 > 0 and a1 > 0):
        raise DomainError("degenerate probability weighted moments for the GPD")
    g, s = pwm.gpd_pwm_params(a0, a1)
    return GpdParams(g, s)


def fit_pot_pwm(sample: ExcessSample) -> FitResult:
    """GPD probability-weighted-moment estimator (Hosking and Wallis)."""
    try:
        p = _pot_pwm_params(sample)
    except DomainError as exc:
        return FitResult("pot-pwm", None, sample.k, False, message=str(exc))
    ll = float(np.sum(gpd_loglik(p, sample.excesses)))
    return FitResult("pot-pwm", p, sample.k, True, std_errors=(math.nan, math.nan), loglik=ll,
                     out_of_theory=_out_of_theory("pot-pwm", p.gamma), message="ok")


def _pot_objective(y: np.ndarray):
    def f(eta):
        g, ls = eta
        s = math.exp(ls)
        p = GpdParams(float(g), s)
        t = y / s
        if not np.all(1.0 + g * t > 0):
            return None
        sc, h = _gpd_derivs(p, y)
        ll = float(np.sum(gpd_loglik(p, y)))
        S, H = sc.sum(axis=0), h.sum(axis=0)
        J = np.array([1.0, s])
        Hn = H * np.outer(J, J)
        Hn[1, 1] += s * S[1]
        return ll, S * J, Hn
    return f


def fit_pot_mle(sample: ExcessSample, config: SolverConfig = SolverConfig()) -> FitResult:
    """GPD maximum likelihood on threshold excesses."""
    k = sample.k
    if k < MIN_MLE_K:
        raise DomainError(f"POT-MLE needs at least {MIN_MLE_K} excesses, got {k}")
    y = np.asarray(sample.excesses, dtype=float)
    if config.init is not None:
        start = GpdParams(*config.init)
    else:
        try:
            start = _pot_pwm_params(sample)
        except DomainError as exc:
            return FitResult("pot-mle", None, k, False, message=str(exc))
    g = start.gamma
    while g < 0 and not np.all(1.0 + g * y / start.sigma > 0):
        g *= 0.5
    start = GpdParams(g, start.sigma)
    out = _newton(_pot_objective(y), np.array([start.gamma, math.log(start.sigma)]), k, config)
    p = GpdParams(float(out.eta[0]), float(math.exp(out.eta[1])))
    h_nat = np.full((2, 2), np.nan)
    se = (math.nan,) * 2
    if math.isfinite(out.ll):
        h_nat = _gpd_derivs(p, y)[1].sum(axis=0)
        se = _std_errors(h_nat)
    return FitResult("pot-mle", p, k, out.converged, out.iterations, out.score_norm, h_nat,
                     out.neg_definite, se, out.ll, _out_of_theory("pot-mle", p.gamma), out.message)
