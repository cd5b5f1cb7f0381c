"""Optimal-AMSE and optimal-k factors, and ratio grids over (gamma, rho).

With ``k`` chosen optimally the AMSE and ``k0`` of an estimator with
asymptotic variance ``VAR`` and bias ``BIAS`` (for lam = 1) factor into a
distribution-dependent part that is common to all estimators and

    amse_factor = (BIAS**2)**(1/(1-2 rho)) * VAR**(-2 rho/(1-2 rho))
    k0_factor   = (VAR**2 / BIAS**2)**(1/(1-2 rho)).

Only ratios of these factors between two estimators are meaningful, since
the common part cannot be computed without the auxiliary function of the
second-order condition.
"""

from __future__ import annotations

import io
import logging
import math
from dataclasses import dataclass

import numpy as np

from .asymptotics import REGISTRY, EstimatorKind, estimator_asym
from .errors import DomainError
from .gev import SecondOrderSpec

log = logging.getLogger(__name__)

GRID_HEADER = "gamma,rho,var_a,var_b,bias_a,bias_b,amse_ratio,k0_ratio,flags"
DEFAULT_GAMMA = (-0.45, 0.45, 0.01)
DEFAULT_RHO = (-1.0, -0.05, 0.05)
PAIRS = {
    "mle": (EstimatorKind.POT_MLE, EstimatorKind.BM_MLE),
    "pwm": (EstimatorKind.POT_PWM, EstimatorKind.BM_PWM),
}
FOUR_WAY = (EstimatorKind.BM_MLE, EstimatorKind.BM_PWM, EstimatorKind.POT_MLE, EstimatorKind.POT_PWM)
NA = "NA"


def _check(variance: float, bias: float, rho: float) -> None:
    if not variance > 0:
        raise DomainError(f"variance must be positive, got {variance!r}")
    if bias == 0 or not math.isfinite(bias):
        raise DomainError("bias must be finite and nonzero")
    if not rho < 0:
        raise DomainError(f"rho must be strictly negative, got {rho!r}")


def amse_factor(variance: float, bias: float, rho: float) -> float:
    _check(variance, bias, rho)
    e = 1.0 / (1.0 - 2.0 * rho)
    return (bias * bias) ** e * variance ** (-2.0 * rho * e)


def k0_factor(variance: float, bias: float, rho: float) -> float:
    _check(variance, bias, rho)
    return (variance * variance / (bias * bias)) ** (1.0 / (1.0 - 2.0 * rho))


def axis(lo: float, hi: float, step: float) -> np.ndarray:
    """Inclusive grid ``lo, lo+step, ..., hi``, rounded to 12 decimals."""
    if not step > 0 or hi < lo:
        raise DomainError(f"invalid range {lo}..{hi} step {step}")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return np.round(lo + step * np.arange(n), 12)


@dataclass(frozen=True)
class Cell:
    gamma: float
    rho: float
    var_a: float
    var_b: float
    bias_a: float
    bias_b: float
    amse_factor_a: float
    amse_factor_b: float
    amse_ratio: float
    k0_ratio: float
    flags: tuple


@dataclass(frozen=True)
class ComparisonGrid:
    kind_a: EstimatorKind
    kind_b: EstimatorKind
    gamma_values: np.ndarray
    rho_values: np.ndarray
    cells: list  # row-major: gamma outer, rho inner

    def cell(self, i: int, j: int) -> Cell:
        return self.cells[i * len(self.rho_values) + j]

    def ratio_field(self, name: str = "amse_ratio") -> np.ndarray:
        vals = np.array([getattr(c, name) for c in self.cells], dtype=float)
        return vals.reshape(len(self.gamma_values), len(self.rho_values))


def _check_window(kinds, gammas, rhos) -> None:
    for kind in kinds:
        entry = REGISTRY[kind]
        for g in (gammas[0], gammas[-1]):
            entry.check(float(g))
    if rhos[0] < -1.0 or rhos[-1] > 0.0:
        raise DomainError("cross-method comparisons are restricted to rho in [-1, 0]")


def _cell(kind_a, kind_b, g: float, r: float, lam: float = 1.0) -> Cell:
    spec = SecondOrderSpec(g, r, lam)
    va, ba = estimator_asym(kind_a, spec)
    vb, bb = estimator_asym(kind_b, spec)
    flags = []
    amse_a = amse_b = amse_ratio = k0_ratio = math.nan
    if r == 0.0:
        flags.append("rho_zero")
    elif ba == 0.0 or bb == 0.0:
        flags.append("zero_bias")
    else:
        amse_a, amse_b = amse_factor(va, ba, r), amse_factor(vb, bb, r)
        amse_ratio = amse_a / amse_b
        k0_ratio = k0_factor(va, ba, r) / k0_factor(vb, bb, r)
    return Cell(float(g), float(r), va, vb, ba, bb, amse_a, amse_b, amse_ratio, k0_ratio, tuple(flags))


def build_grid(kind_a, kind_b, gamma_range=DEFAULT_GAMMA, rho_range=DEFAULT_RHO) -> ComparisonGrid:
    """Ratios ``a / b`` of asymptotic quantities on a (gamma, rho) grid.

    ``gamma_range`` and ``rho_range`` are ``(lo, hi, step)`` triples.
    """
    kind_a = EstimatorKind.parse(kind_a) if isinstance(kind_a, str) else kind_a
    kind_b = EstimatorKind.parse(kind_b) if isinstance(kind_b, str) else kind_b
    gammas, rhos = axis(*gamma_range), axis(*rho_range)
    _check_window((kind_a, kind_b), gammas, rhos)
    cells = [_cell(kind_a, kind_b, float(g), float(r)) for g in gammas for r in rhos]
    return ComparisonGrid(kind_a, kind_b, gammas, rhos, cells)


def fmt(v: float) -> str:
    """Shortest round-trip representation; ``NA`` for NaN."""
    return NA if isinstance(v, float) and math.isnan(v) else repr(float(v))


def grid_csv(grid: ComparisonGrid) -> str:
    out = io.StringIO(newline="")
    out.write(GRID_HEADER + "\n")
    for c in grid.cells:
        row = [c.gamma, c.rho, c.var_a, c.var_b, c.bias_a, c.bias_b, c.amse_ratio, c.k0_ratio]
        out.write(",".join(fmt(v) for v in row) + "," + "|".join(c.flags) + "\n")
    return out.getvalue()


def four_way_header() -> str:
    cols = ["gamma", "rho"]
    for stem in ("var", "bias", "amse", "k0"):
        cols += [f"{stem}_{k.value.lower().replace('-', '_')}" for k in FOUR_WAY]
    return ",".join(cols + ["flags"])


def four_way_csv(gamma_range=DEFAULT_GAMMA, rho_range=DEFAULT_RHO) -> str:
    """Per-estimator VAR, BIAS, AMSE factor and k0 factor for all four kinds.

    Columns follow :func:`four_way_header`: ``gamma, rho``, then the four
    variances, biases, AMSE factors and k0 factors in the order BM-MLE,
    BM-PWM, POT-MLE, POT-PWM, then ``flags``.
    """
    gammas, rhos = axis(*gamma_range), axis(*rho_range)
    _check_window(FOUR_WAY, gammas, rhos)
    out = io.StringIO(newline="")
    out.write(four_way_header() + "\n")
    for g in gammas:
        for r in rhos:
            spec = SecondOrderSpec(float(g), float(r), 1.0)
            vb = [estimator_asym(k, spec) for k in FOUR_WAY]
            flags = []
            if r == 0.0:
                flags.append("rho_zero")
                am = k0 = [math.nan] * 4
            elif any(b == 0.0 for _, b in vb):
                flags.append("zero_bias")
                am = k0 = [math.nan] * 4
            else:
                am = [amse_factor(v, b, float(r)) for v, b in vb]
                k0 = [k0_factor(v, b, float(r)) for v, b in vb]
            row = [float(g), float(r)] + [v for v, _ in vb] + [b for _, b in vb] + am + k0
            out.write(",".join(fmt(v) for v in row) + "," + "|".join(flags) + "\n")
    return out.getvalue()
