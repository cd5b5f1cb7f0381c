"""Monte Carlo studies of the estimators against their asymptotic laws.

Every catalog distribution is specified through ``V = (-1/log F)^<-`` so that
a raw draw is ``V(Z)`` with ``Z = -1/log U`` unit Frechet, and the maximum of
``m`` raw draws is exactly ``V(m Z)``: one draw per block instead of ``m``.

Replication ``r`` of a study with seed ``s`` draws from its own Philox
stream keyed by ``SeedSequence(s, spawn_key=(r,))``, and the per-replication
results are reduced in replication order, so a summary is bit-identical for
any number of worker threads.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from .asymptotics import REGISTRY, EstimatorKind, estimator_asym, mle_bm_asym
from .errors import DomainError
from .estimators import SolverConfig, fit_bm_mle, fit_bm_pwm, fit_pot_mle, fit_pot_pwm
from .gev import SecondOrderSpec, _boxcox
from .sampling import BlockMaximaSample, ExcessSample, RawSeries, excesses_over_top_k

log = logging.getLogger(__name__)

_Fn = Callable[[float], float]


@dataclass(frozen=True)
class TestDistribution:
    """A distribution in a max-domain of attraction with known second-order structure.

    ``V`` maps an array of ``t > 0`` to quantiles; ``a_fn``, ``b_fn`` and
    ``A_fn`` satisfy ``(V(m x) - b_fn(m)) / a_fn(m) -> (x**g - 1)/g`` with
    second-order rate ``A_fn(m)``.  ``excess_sampler`` (if set) draws exact
    threshold excesses for the POT estimators.
    """

    __test__ = False  # not a pytest class

    name: str
    true_gamma0: float
    true_rho: float
    V: Callable[[np.ndarray], np.ndarray]
    a_fn: _Fn
    b_fn: _Fn
    A_fn: _Fn
    description: str = ""
    excess_sampler: Optional[Callable[[int, np.random.Generator], np.ndarray]] = None

    def sampler(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self.V(_unit_frechet(n, rng))

    def block_maxima(self, k: int, m: int, rng: np.random.Generator) -> np.ndarray:
        return self.V(m * _unit_frechet(k, rng))

    def lambda_hat(self, k: int, m: int) -> float:
        return math.sqrt(k) * self.A_fn(m)


def _unit_frechet(n: int, rng: np.random.Generator) -> np.ndarray:
    # 1 - U lies in (0, 1], so -log(1-U) > 0 except for a measure-zero draw of U=0
    e = -np.log1p(-rng.random(n))
    return 1.0 / np.where(e > 0, e, np.finfo(float).tiny)


def exact_gev(gamma0: float) -> TestDistribution:
    """``F = G_gamma0`` itself: ``V(t) = (t**g - 1)/g``, no second-order bias."""
    return TestDistribution(
        "exact-gev", gamma0, -1.0,
        V=lambda t: _boxcox(gamma0, np.log(t)),
        a_fn=lambda m: m**gamma0,
        b_fn=lambda m: float(_boxcox(gamma0, math.log(m))),
        A_fn=lambda m: 0.0,
        description="standard GEV; A = 0 so rho is immaterial",
    )


def frechet(gamma0: float = 1.0) -> TestDistribution:
    """Frechet ``F(x) = exp(-x**(-1/g))``, ``V(t) = t**g``; A = 0."""
    if not gamma0 > 0:
        raise DomainError("the Frechet family needs gamma0 > 0")
    return TestDistribution(
        "frechet", gamma0, -1.0,
        V=lambda t: np.power(t, gamma0),
        a_fn=lambda m: gamma0 * m**gamma0,
        b_fn=lambda m: m**gamma0,
        A_fn=lambda m: 0.0,
        description="Frechet; exactly GEV after affine normalization, A = 0",
    )


def hall(gamma0: float = 0.25, rho: float = -0.5, c: float = -1.0) -> TestDistribution:
    """Second-order family ``V(t) = (t**g - 1)/g + c (t**(g+rho) - 1)/(g+rho)``.

    With ``a(t) = t**g (1 + c t**rho)`` the second-order relation holds with
    no remainder:

        (V(t x) - V(t)) / a(t) = (x**g - 1)/g + A(t) H(x),
        A(t) = c rho t**rho / (1 + c t**rho).

    ``c < 0`` gives ``A > 0``.  ``V`` is increasing for ``1 + c t**rho > 0``;
    below ``t0`` where ``1 + c t0**rho = 1/2`` it is continued by
    ``V(t0) + V'(t0) t0 log(t/t0)`` so that it remains a quantile function.
    """
    if not rho < 0:
        raise DomainError("the Hall family needs rho < 0")
    if gamma0 + rho == 0.0:
        raise DomainError("gamma0 + rho must be nonzero")
    g, gr = gamma0, gamma0 + rho
    t0 = (2.0 * abs(c)) ** (-1.0 / rho) if c < 0 else 0.0

    def core(lt):
        return _boxcox(g, lt) + c * _boxcox(gr, lt)

    v0 = float(core(math.log(t0))) if t0 > 0 else 0.0
    slope = t0**g * (1.0 + c * t0**rho) if t0 > 0 else 0.0

    def V(t):
        lt = np.log(np.asarray(t, dtype=float))
        if t0 <= 0:
            return core(lt)
        lt0 = math.log(t0)
        return np.where(lt >= lt0, core(np.maximum(lt, lt0)), v0 + slope * (lt - lt0))

    def A(m):
        mr = m**rho
        return c * rho * mr / (1.0 + c * mr)

    return TestDistribution(
        "hall", g, rho, V=V,
        a_fn=lambda m: m**g * (1.0 + c * m**rho),
        b_fn=lambda m: float(V(m)),
        A_fn=A,
        description=f"V(t) = E_g(t) + c E_(g+rho)(t) with c = {c}; A(t) = c rho t^rho / (1 + c t^rho)",
    )


def exact_gpd(gamma0: float) -> TestDistribution:
    """Unit-scale GPD; POT studies draw exact excesses from it."""

    def V(t):
        # GPD quantile at exp(-1/t)
        lt = -np.log(-np.expm1(-1.0 / np.asarray(t, dtype=float)))
        return _boxcox(gamma0, lt)

    def excesses(k, rng):
        return _boxcox(gamma0, -np.log1p(-rng.random(k)))

    def no_bm(_m):
        raise DomainError("exact-gpd is for POT studies; it has no block-maxima normalization")

    return TestDistribution(
        "exact-gpd", gamma0, -1.0, V=V, a_fn=no_bm, b_fn=no_bm, A_fn=lambda m: 0.0,
        description="GPD(gamma0, 1) excesses", excess_sampler=excesses,
    )


CATALOG: dict[str, Callable[..., TestDistribution]] = {
    "exact-gev": exact_gev,
    "hall": hall,
    "frechet": frechet,
    "exact-gpd": exact_gpd,
}


def make_distribution(name: str, gamma0: float, rho: Optional[float] = None) -> TestDistribution:
    if name not in CATALOG:
        raise DomainError(f"unknown distribution {name!r}; catalog: {', '.join(CATALOG)}")
    if name == "hall":
        return hall(gamma0, -0.5 if rho is None else rho)
    return CATALOG[name](gamma0)


def block_size_for_lambda(dist: TestDistribution, k: int, lam: float) -> int:
    """Smallest integer block size with ``sqrt(k) A(m) <= lam``."""
    f = lambda lm: dist.lambda_hat(k, math.exp(lm)) - lam
    lo, hi = math.log(4.0), math.log(1e12)
    if f(lo) < 0:
        return 4
    return int(math.ceil(math.exp(brentq(f, lo, hi, xtol=1e-12))))


def stream(seed: int, rep: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=(rep,))))


def sample_exact_gev(gamma0: float, k: int, seed: int, m: int = 1) -> BlockMaximaSample:
    """k i.i.d. maxima of blocks of m standard GEV draws (inverse-cdf transform)."""
    return sample_domain_of_attraction(exact_gev(gamma0), k, m, seed)


def sample_domain_of_attraction(dist: TestDistribution, k: int, m: int, seed: int | np.random.Generator,
                                brute_force: bool = False) -> BlockMaximaSample:
    """k block maxima of size m; ``brute_force`` takes the max of m raw draws instead of one ``V(m Z)``."""
    rng = seed if isinstance(seed, np.random.Generator) else stream(int(seed), 0)
    if brute_force:
        mx = dist.sampler(k * m, rng).reshape(k, m).max(axis=1)
    else:
        mx = dist.block_maxima(k, m, rng)
    return BlockMaximaSample(int(m), mx)


@dataclass(frozen=True)
class McConfig:
    replications: int
    num_blocks: int
    block_size: int = 1
    seed: int = 0
    parallelism: int = 1
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if self.replications < 1:
            raise DomainError("replications must be >= 1")
        if self.num_blocks < 1 or self.block_size < 1:
            raise DomainError("num_blocks and block_size must be >= 1")
        if self.parallelism < 1:
            raise DomainError("parallelism must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class McSummary:
    distribution: str
    estimator: str
    gamma0: float
    rho: float
    k: int
    m: int
    replications: int
    seed: int
    lambda_hat: float
    components: tuple
    n_converged: int
    convergence_rate: float
    mean: np.ndarray
    cov: np.ndarray
    mean_se: np.ndarray
    var_se: np.ndarray
    target_mean: Optional[np.ndarray]
    target_var: Optional[np.ndarray]
    checks: dict

    @property
    def n_failed(self) -> int:
        return self.replications - self.n_converged


def _fit(kind: EstimatorKind, dist: TestDistribution, cfg: McConfig, rng: np.random.Generator):
    k, m = cfg.num_blocks, cfg.block_size
    if kind.is_bm:
        x = dist.block_maxima(k, m, rng)
        a, b = dist.a_fn(m), dist.b_fn(m)
        sample = BlockMaximaSample(m, x)
        res = fit_bm_mle(sample, cfg.solver) if kind is EstimatorKind.BM_MLE else fit_bm_pwm(sample)
        if not res.converged:
            return None
        p = res.params
        return np.sqrt(k) * np.array([p.gamma - dist.true_gamma0, (p.mu - b) / a, p.sigma / a - 1.0])
    if dist.excess_sampler is not None:
        sample = ExcessSample(0.0, dist.excess_sampler(k, rng), k)
    else:
        sample = excesses_over_top_k(RawSeries(dist.sampler(k * m, rng)), k)
    res = fit_pot_mle(sample, cfg.solver) if kind is EstimatorKind.POT_MLE else fit_pot_pwm(sample)
    if not res.converged:
        return None
    return np.sqrt(k) * np.array([res.params.gamma - dist.true_gamma0])


def _targets(kind: EstimatorKind, dist: TestDistribution, lam: float):
    """Asymptotic mean and variances of the normalized error, or ``(None, None)``."""
    spec = SecondOrderSpec(dist.true_gamma0, dist.true_rho, lam)
    if kind is EstimatorKind.BM_MLE:
        res = mle_bm_asym(spec)
        return res.full_bias, np.diag(res.full_cov)
    if not kind.is_bm and dist.excess_sampler is None:
        # the POT rate function of a catalog entry is not the block-maxima A
        return None, None
    try:
        REGISTRY[kind].check(dist.true_gamma0)
    except DomainError:
        return None, None
    var, bias = estimator_asym(kind, spec)
    return np.array([bias]), np.array([var])


def run_study(dist: TestDistribution, config: McConfig, estimator: EstimatorKind | str,
              mean_rel_tol: float = 0.15, var_rel_tol: float = 0.10) -> McSummary:
    """Replicate fits and compare the normalized errors with their limit law.

    For block maxima the normalized error is
    ``sqrt(k) (gamma_hat - gamma0, (mu_hat - b_m)/a_m, sigma_hat/a_m - 1)`` with
    the true ``a_m, b_m`` of ``dist``; for POT it is the gamma component only.
    Non-converged replications are counted and excluded.
    """
    kind = EstimatorKind.parse(estimator) if isinstance(estimator, str) else estimator
    k, m, R = config.num_blocks, config.block_size, config.replications
    lam = dist.lambda_hat(k, m) if kind.is_bm else 0.0

    def one(rep):
        return _fit(kind, dist, config, stream(config.seed, rep))

    if config.parallelism == 1:
        results = [one(r) for r in range(R)]
    else:
        with ThreadPoolExecutor(max_workers=config.parallelism) as ex:
            results = list(ex.map(one, range(R)))
    comps = ("gamma", "mu", "sigma") if kind.is_bm else ("gamma",)
    ok = [r for r in results if r is not None]
    n = len(ok)
    p = len(comps)
    if n:
        X = np.vstack(ok)
        mean = X.mean(axis=0)
    else:
        mean = np.full(p, np.nan)
    if n >= 2:
        cov = np.atleast_2d(np.cov(X, rowvar=False, ddof=1))
        var = np.diag(cov)
        mean_se = np.sqrt(var / n)
        var_se = var * math.sqrt(2.0 / (n - 1))
    else:
        cov = np.full((p, p), np.nan)
        mean_se = np.full(p, np.inf)
        var_se = np.full(p, np.inf)
    t_mean, t_var = _targets(kind, dist, lam)
    checks = {"convergence_rate": n / R}
    if t_mean is not None and n >= 2:
        d = np.abs(mean - t_mean)
        tol_mean = np.maximum(3.0 * mean_se, mean_rel_tol * np.abs(t_mean)) if lam else 3.0 * mean_se
        checks["mean_within_tolerance"] = [bool(x) for x in d <= tol_mean]
        checks["variance_within_tolerance"] = [bool(x) for x in np.abs(np.diag(cov) / t_var - 1) <= var_rel_tol]
    return McSummary(dist.name, kind.value, dist.true_gamma0, dist.true_rho, k, m, R, config.seed, lam,
                     comps, n, n / R, mean, cov, mean_se, var_se, t_mean, t_var, checks)


def validate_registry(kind: EstimatorKind | str, gamma0: float = 0.2, k: int = 2000, R: int = 2000,
                      seed: int = 2024, tol: float = 0.10, parallelism: int = 1) -> dict:
    """Monte Carlo check of a registry variance on exact-model data.

    BM kinds use exact GEV block maxima and POT kinds exact GPD excesses.
    """
    kind = EstimatorKind.parse(kind) if isinstance(kind, str) else kind
    dist = exact_gev(gamma0) if kind.is_bm else exact_gpd(gamma0)
    s = run_study(dist, McConfig(R, k, 1, seed, parallelism), kind)
    emp = float(s.cov[0, 0])
    reg = float(REGISTRY[kind].variance(gamma0))
    return {
        "kind": kind.value,
        "gamma0": gamma0,
        "empirical_variance": emp,
        "registry_variance": reg,
        "relative_error": abs(emp / reg - 1.0),
        "passed": abs(emp / reg - 1.0) <= tol,
        "convergence_rate": s.convergence_rate,
        "provenance": REGISTRY[kind].provenance,
    }
