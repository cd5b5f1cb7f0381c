"""Command-line interface: ``blockmax {fit,asym,compare,simulate}``.

Reports go to standard output (or ``--output``); logs go to standard error.
Exit status is 0 on success, 1 on usage or I/O errors and 2 when a numerical
procedure does not converge (the report is still written).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from typing import Any, Sequence

import numpy as np

from . import __version__
from .asymptotics import EstimatorKind, REGISTRY, bias_vector, estimator_asym, fisher_info
from .compare import DEFAULT_GAMMA, DEFAULT_RHO, PAIRS, build_grid, four_way_csv, grid_csv
from .errors import ConvergenceError, DomainError, QuadratureError, SingularMatrixError
from .estimators import fit_bm_mle, fit_bm_pwm, fit_pot_mle, fit_pot_pwm
from .gev import SecondOrderSpec
from .montecarlo import CATALOG, McConfig, block_size_for_lambda, make_distribution, run_study
from .numerics import invert3
from .sampling import DataFormatError, block_maxima, excesses_over_top_k, read_series

log = logging.getLogger("blockmax")

EXIT_OK, EXIT_USAGE, EXIT_NONCONVERGED = 0, 1, 2
PARAM_NAMES = ("gamma", "mu", "sigma")


class UsageError(Exception):
    pass


def _clean(obj: Any) -> Any:
    """Make ``obj`` JSON-ready: numpy to Python, non-finite floats to ``None``."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def dumps(report: dict) -> str:
    """Stable JSON: insertion-ordered keys, shortest round-trip floats, LF ending."""
    return json.dumps(_clean(report), indent=2, allow_nan=False) + "\n"


def _emit(text: str, path: str | None) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from None


# --------------------------------------------------------------------------
# fit

def _fit_report(args) -> tuple[dict, bool]:
    try:
        series = read_series(args.input)
    except OSError as exc:
        raise UsageError(f"cannot read {args.input}: {exc.strerror or exc}") from None
    method = args.method
    report: dict[str, Any] = {"method": method, "input": args.input, "n": len(series)}
    if method.startswith("bm"):
        if args.block_size is None:
            raise UsageError(f"--method {method} requires --block-size")
        sample = block_maxima(series, args.block_size)
        report.update(block_size=sample.block_size, k=sample.num_blocks)
        res = fit_bm_mle(sample) if method == "bm-mle" else fit_bm_pwm(sample, with_std_errors=True)
        names = PARAM_NAMES
    else:
        if args.top_k is None:
            raise UsageError(f"--method {method} requires --top-k")
        sample = excesses_over_top_k(series, args.top_k)
        report.update(threshold=sample.threshold, requested_k=sample.requested_k, k=sample.k,
                      ties_at_threshold=sample.ties_at_threshold)
        res = fit_pot_mle(sample) if method == "pot-mle" else fit_pot_pwm(sample)
        names = ("gamma", "sigma")
    params = None if res.params is None else {n: getattr(res.params, n) for n in names}
    se = dict(zip(names, res.std_errors)) if res.std_errors else {n: math.nan for n in names}
    report.update(
        params=params,
        std_errors=se,
        converged=res.converged,
        iterations=res.iterations,
        final_score_norm=res.final_score_norm,
        neg_definite=res.neg_definite,
        observed_hessian=res.observed_hessian,
        loglik=res.loglik,
        out_of_theory=res.out_of_theory,
        message=res.message,
    )
    return report, res.converged


def cmd_fit(args) -> int:
    report, ok = _fit_report(args)
    if args.format == "csv":
        p = report["params"] or {}
        cols = ["method", "k", "converged"] + [f"{n}" for n in p] + [f"se_{n}" for n in report["std_errors"]]
        vals = [report["method"], report["k"], report["converged"]] + list(p.values()) + list(report["std_errors"].values())
        out = ",".join(cols) + "\n" + ",".join(_csv_val(v) for v in vals) + "\n"
    else:
        out = dumps(report)
    _emit(out, args.output)
    if not ok:
        log.error("fit did not converge: %s", report["message"])
        return EXIT_NONCONVERGED
    return EXIT_OK


def _csv_val(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else "NA"
    return str(v)


# --------------------------------------------------------------------------
# asym

def cmd_asym(args) -> int:
    spec = SecondOrderSpec(args.gamma0, args.rho, args.lam)
    info, r_info = fisher_info(spec.gamma0, args.numeric)
    b, r_bias = bias_vector(spec.gamma0, spec.rho, args.numeric)
    cov = invert3(info)
    full_bias = spec.lam * (cov @ b)
    report = {
        "gamma0": spec.gamma0,
        "rho": spec.rho,
        "lambda": spec.lam,
        "route": {"info": r_info, "bias": r_bias},
        "parameters": list(PARAM_NAMES),
        "info": info,
        "info_inverse": cov,
        "b": b,
        "bias": full_bias,
        "per_parameter": {
            n: {"variance": cov[i, i], "bias": full_bias[i]} for i, n in enumerate(PARAM_NAMES)
        },
    }
    if args.all_kinds:
        kinds = {}
        for kind in EstimatorKind:
            try:
                REGISTRY[kind].check(spec.gamma0)
                v, bb = estimator_asym(kind, spec)
                kinds[kind.value] = {"variance": v, "bias": bb}
            except DomainError as exc:
                kinds[kind.value] = {"error": str(exc)}
        report["estimators"] = kinds
    _emit(dumps(report), args.output)
    return EXIT_OK


# --------------------------------------------------------------------------
# compare

def cmd_compare(args) -> int:
    g_lo, g_hi = args.gamma_range
    r_lo, r_hi = args.rho_range
    g_step, r_step = args.steps
    if not (-1.0 <= r_lo <= r_hi <= 0.0):
        raise UsageError("--rho-range must lie within [-1, 0]")
    gr, rr = (g_lo, g_hi, g_step), (r_lo, r_hi, r_step)
    if args.pair == "all":
        text = four_way_csv(gr, rr)
    else:
        a, b = PAIRS[args.pair]
        text = grid_csv(build_grid(a, b, gr, rr))
    _emit(text, args.output)
    return EXIT_OK


# --------------------------------------------------------------------------
# simulate

def simulate_report(args) -> dict:
    kind = EstimatorKind.parse(args.estimator)
    try:
        dist = make_distribution(args.dist, args.gamma0, args.rho)
    except DomainError as exc:
        raise UsageError(str(exc)) from None
    m = args.m
    if m is None:
        m = block_size_for_lambda(dist, args.k, args.lam) if args.lam else 1
    cfg = McConfig(args.replications, args.k, m, args.seed, args.threads)
    s = run_study(dist, cfg, kind)
    table = []
    for i, c in enumerate(s.components):
        row = {
            "component": c,
            "empirical_mean": s.mean[i],
            "mean_se": s.mean_se[i],
            "target_mean": None if s.target_mean is None else s.target_mean[i],
            "empirical_variance": s.cov[i, i],
            "variance_se": s.var_se[i],
            "target_variance": None if s.target_var is None else s.target_var[i],
        }
        if "mean_within_tolerance" in s.checks:
            row["mean_pass"] = s.checks["mean_within_tolerance"][i]
            row["variance_pass"] = s.checks["variance_within_tolerance"][i]
        table.append(row)
    return {
        "distribution": s.distribution,
        "estimator": s.estimator,
        "gamma0": s.gamma0,
        "rho": s.rho,
        "k": s.k,
        "m": s.m,
        "replications": s.replications,
        "seed": s.seed,
        "lambda_hat": s.lambda_hat,
        "n_converged": s.n_converged,
        "n_failed": s.n_failed,
        "convergence_rate": s.convergence_rate,
        "components": list(s.components),
        "mean": s.mean,
        "covariance": s.cov,
        "table": table,
    }


def cmd_simulate(args) -> int:
    _emit(dumps(simulate_report(args)), args.output)
    return EXIT_OK


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="blockmax", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fit", help="fit an estimator to a data file (one value per line)")
    f.add_argument("input", help="data file, one number per line, '#' comments allowed")
    f.add_argument("--method", required=True, choices=["bm-mle", "bm-pwm", "pot-mle", "pot-pwm"])
    grp = f.add_mutually_exclusive_group(required=True)
    grp.add_argument("--block-size", type=int, metavar="M")
    grp.add_argument("--top-k", type=int, metavar="K")
    f.add_argument("--format", choices=["json", "csv"], default="json")
    f.add_argument("--seed", type=int, default=None, help="accepted for symmetry; fitting is deterministic")
    f.add_argument("-o", "--output")
    f.set_defaults(func=cmd_fit)

    a = sub.add_parser("asym", help="Fisher information and bias of the BM-MLE limit law")
    a.add_argument("--gamma0", type=float, required=True)
    a.add_argument("--rho", type=float, default=0.0)
    a.add_argument("--lambda", dest="lam", type=float, default=0.0)
    a.add_argument("--numeric", action="store_true", help="force the quadrature route")
    a.add_argument("--all-kinds", action="store_true", help="also report the other estimators")
    a.add_argument("-o", "--output")
    a.set_defaults(func=cmd_asym)

    c = sub.add_parser("compare", help="CSV grid of asymptotic ratios over (gamma, rho)")
    c.add_argument("--pair", choices=["mle", "pwm", "all"], default="mle",
                   help="mle: POT-MLE/BM-MLE, pwm: POT-PWM/BM-PWM, all: per-estimator columns")
    c.add_argument("--gamma-range", type=float, nargs=2, metavar=("LO", "HI"), default=DEFAULT_GAMMA[:2])
    c.add_argument("--rho-range", type=float, nargs=2, metavar=("LO", "HI"), default=DEFAULT_RHO[:2])
    c.add_argument("--steps", type=float, nargs=2, metavar=("GAMMA_STEP", "RHO_STEP"),
                   default=(DEFAULT_GAMMA[2], DEFAULT_RHO[2]))
    c.add_argument("-o", "--output")
    c.set_defaults(func=cmd_compare)

    s = sub.add_parser("simulate", help="Monte Carlo study of an estimator")
    s.add_argument("--dist", required=True, help=f"one of: {', '.join(CATALOG)}")
    s.add_argument("--gamma0", type=float, required=True)
    s.add_argument("--rho", type=float, default=None, help="second-order parameter (hall only)")
    s.add_argument("--k", type=int, required=True)
    mg = s.add_mutually_exclusive_group()
    mg.add_argument("--m", type=int, default=None)
    mg.add_argument("--lambda", dest="lam", type=float, default=None,
                    help="choose m so that sqrt(k) A(m) is about this value")
    s.add_argument("--replications", type=int, default=1000)
    s.add_argument("--estimator", default="bm-mle", choices=[k.value.lower() for k in EstimatorKind])
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_simulate)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except (UsageError, DataFormatError, DomainError) as exc:
        print(f"blockmax {args.command}: error: {exc}", file=sys.stderr)
        if args.command == "simulate" and args.dist not in CATALOG:
            print(f"available distributions: {', '.join(CATALOG)}", file=sys.stderr)
        return EXIT_USAGE
    except (QuadratureError, ConvergenceError, SingularMatrixError) as exc:
        print(f"blockmax {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED


if __name__ == "__main__":
    sys.exit(main())
