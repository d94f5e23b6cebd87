"""Command-line interface: ``oufinite <command> [flags]``.

Exit codes: 0 success, 1 numerical failure, 2 usage or input error.
Every file written with ``--out`` gets a ``<out>.manifest.json`` next to it
recording the command, all flag values, seeds, package version, a
timestamp and SHA-256 digests of the outputs.  Files are written to a
temporary name and renamed into place.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, Sequence

import numpy as np

from . import __version__
from . import estimate as est
from . import invert, moments, oracle, transform
from .errors import MalformedInput, OUError, ValidationError
from .model import EstimateReport, OUParams, rescale_to_unit_sigma, validate
from .quadrature import QuadratureConfig
from .simulate import SimConfig, read_paths_csv, path_to_stats, simulate_ou_exact, write_batch_csv, write_path_csv

EXIT_OK, EXIT_NUMERICAL, EXIT_USAGE = 0, 1, 2


@dataclass(frozen=True)
class RunManifest:
    command: str
    parameters: dict
    seeds: list
    version: str
    timestamp: str
    outputs: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {
                "command": self.command,
                "parameters": self.parameters,
                "seeds": self.seeds,
                "version": self.version,
                "timestamp": self.timestamp,
                "outputs": self.outputs,
            },
            indent=2,
            sort_keys=True,
        )


class UsageError(Exception):
    pass


def atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(args, text: str, seeds: Sequence[int] = ()) -> None:
    """Write ``text`` to ``--out`` (plus manifest) or to stdout."""
    if args.out is None:
        sys.stdout.write(text)
        return
    atomic_write(args.out, text)
    params = {k: v for k, v in vars(args).items() if k not in ("func",)}
    manifest = RunManifest(
        command=args.command,
        parameters=params,
        seeds=list(seeds),
        version=__version__,
        timestamp=_dt.datetime.now(_dt.timezone.utc).isoformat(),
        outputs={os.path.basename(args.out): hashlib.sha256(text.encode()).hexdigest()},
    )
    atomic_write(args.out + ".manifest.json", manifest.to_json() + "\n")


def _params(args) -> OUParams:
    return validate(OUParams(args.lam, args.alpha, args.sigma, args.y0, args.horizon))


def _floats(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"not a comma-separated list of numbers: {text!r}") from None
    return vals


def _grid(args) -> list[float]:
    if args.t_grid is not None:
        grid = _floats(args.t_grid)
    else:
        if args.t_step <= 0:
            raise UsageError("--t-step must be positive")
        n = int(math.floor((args.t_max - args.t_min) / args.t_step + 1e-9)) + 1
        grid = [args.t_min + k * args.t_step for k in range(max(n, 0))]
    grid = [t for t in grid if t > 0]
    if not grid:
        raise UsageError("the horizon grid is empty")
    return grid


def _quad(args) -> QuadratureConfig:
    return QuadratureConfig(rel_tol=args.rel_tol, abs_tol=args.abs_tol)


# ---------------------------------------------------------------------------
# commands


def cmd_simulate(args) -> int:
    params = _params(args)
    batch = simulate_ou_exact(params, SimConfig(args.steps, args.seed, args.paths))
    buf = io.StringIO()
    if args.paths == 1:
        write_path_csv(batch.path(0), buf)
    else:
        write_batch_csv(batch, buf)
    _emit(args, buf.getvalue(), [args.seed])
    return EXIT_OK


def _reports_for(stats, args) -> list[dict]:
    """Estimator reports for one path, on the sigma = 1 scale internally."""
    sig = args.sigma
    unit = stats.scaled(sig) if sig != 1.0 else stats
    T, y0 = unit.horizon, unit.y0
    qcfg = _quad(args)
    out: list[EstimateReport] = []
    ka, kl = args.known_alpha, args.known_lambda
    if ka is not None:
        a_unit = ka / sig
        lam_hat = est.mle_lambda_given_alpha(unit, a_unit)
        lam_ref = kl if kl is not None else lam_hat
        p = OUParams(lam_ref, a_unit, 1.0, y0, T)
        extra = {"evaluated_at_lambda": lam_ref}
        try:
            m = moments.lambda_hat_moments(p, qcfg)
            cr = moments.cramer_rao_lambda(p, moments.bias_derivative_lambda_hat(p, qcfg))
            bias, mse = m.bias, m.mse
        except OUError as exc:
            bias = mse = cr = None
            extra["analytic_error"] = type(exc).__name__
        out.append(EstimateReport("lambda_hat_given_alpha", lam_hat, bias, mse, cr, 2.0 / T, extra))
    if kl is not None:
        a_hat = est.mle_alpha_given_lambda(unit, kl) * sig
        if kl != 0:
            _, mse = moments.alpha_hat_moments(OUParams(kl, 0.0, sig, y0 * sig, T))
            out.append(EstimateReport("alpha_hat_given_lambda", a_hat, 0.0, mse, mse, mse))
    if ka is None:
        abar = est.alpha_bar(unit) * sig
        a_ref = abar
        lam_ref = kl
        if lam_ref is None:
            lam_bar = est.lambda_bar(unit)
            lam_ref = lam_bar
        if lam_ref is not None:
            ab = moments.alpha_bar_moments(OUParams(lam_ref, a_ref, sig, y0 * sig, T))
            out.append(
                EstimateReport(
                    "alpha_bar", abar, ab.mean - a_ref, ab.variance + (ab.mean - a_ref) ** 2, None,
                    ab.asymptotic_ref, {"evaluated_at_lambda": lam_ref},
                )
            )
        if kl is None:
            extra = {"evaluated_at_lambda": lam_bar}
            bias = mse = None
            if y0 == 0 and lam_bar > 0:
                try:
                    lb = moments.lambda_bar_moments(OUParams(lam_bar, a_ref / sig, 1.0, 0.0, T), qcfg)
                    bias, mse = lb.bias, lb.mse
                except OUError as exc:
                    extra["analytic_error"] = type(exc).__name__
            else:
                extra["analytic_error"] = "analytic moments need y0 = 0 and lambda_bar > 0"
            out.append(EstimateReport("lambda_bar", lam_bar, bias, mse, None, 4.0 / T, extra))
    return [r.to_dict() for r in out]


def cmd_estimate(args) -> int:
    if args.sigma <= 0:
        raise UsageError("--sigma must be positive")
    try:
        with open(args.input, newline="") as fh:
            paths = read_paths_csv(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {args.input}: {exc}") from None
    result = []
    for k, path in enumerate(paths):
        stats = path_to_stats(path)
        result.append({"path_id": k, "horizon": stats.horizon, "reports": _reports_for(stats, args)})
    _emit(args, json.dumps(result, indent=2) + "\n")
    return EXIT_OK


def _table1_golden() -> dict:
    text = resources.files("oufinite").joinpath("data/table1.csv").read_text()
    rows = {}
    for line in text.strip().splitlines()[1:]:
        lam, a, T, b, m = (float(v) for v in line.split(","))
        rows[(lam, a, T)] = (b, m)
    return rows


def table1_mismatches(rows, tol: float = 0.001) -> list[tuple]:
    """Cells whose bias or mse differs from the reference table by more than ``tol``."""
    golden = _table1_golden()
    bad = []
    for r in rows:
        key = (r.lam, r.alpha, r.horizon)
        if key not in golden:
            continue
        gb, gm = golden[key]
        if not (abs(r.bias - gb) <= tol and abs(r.mse - gm) <= tol):
            bad.append((key, (r.bias, r.mse), (gb, gm)))
    return bad


def cmd_table1(args) -> int:
    rows = moments.table1(_quad(args))
    buf = io.StringIO()
    buf.write("lambda,alpha,T,bias,mse,err\n")
    for r in rows:
        buf.write(f"{r.lam!r},{r.alpha!r},{r.horizon!r},{r.bias!r},{r.mse!r},{r.err}\n")
    _emit(args, buf.getvalue())
    failed = any(r.err for r in rows)
    if args.compare:
        bad = table1_mismatches(rows, args.tolerance)
        for key, got, ref in bad:
            print(
                f"mismatch lambda={key[0]} alpha={key[1]} T={key[2]:g}: "
                f"computed bias={got[0]:.4f} mse={got[1]:.4f}, reference bias={ref[0]} mse={ref[1]}",
                file=sys.stderr,
            )
        print(f"{len(rows) - len(bad)}/{len(rows)} cells within {args.tolerance}", file=sys.stderr)
        failed = failed or bool(bad)
    return EXIT_NUMERICAL if failed else EXIT_OK


def cmd_curves(args) -> int:
    grid = _grid(args)
    lams = _floats(args.lambdas)
    alphas = _floats(args.alphas)
    if not lams or not alphas:
        raise UsageError("need at least one lambda and one alpha")
    buf = io.StringIO()
    buf.write("lambda,alpha,T,f1,f2,err\n")
    failed = False
    for lam in lams:
        for a in alphas:
            for r in moments.scaled_curves(OUParams(lam, a, 1.0, args.y0, 1.0), grid, _quad(args)):
                failed = failed or bool(r.err)
                buf.write(f"{r.lam!r},{r.alpha!r},{r.horizon!r},{r.f1!r},{r.f2!r},{r.err}\n")
    _emit(args, buf.getvalue())
    return EXIT_NUMERICAL if failed else EXIT_OK


def cmd_cdf(args) -> int:
    params, _ = rescale_to_unit_sigma(_params(args))
    if args.x is not None:
        xs = _floats(args.x)
    else:
        if args.x_count < 1:
            raise UsageError("--x-count must be positive")
        xs = list(np.linspace(args.x_min, args.x_max, args.x_count))
    if not xs:
        raise UsageError("no evaluation points")
    cfg = invert.InversionConfig(method=args.method, gs_order=args.gs_order)
    results = invert.cdf_grid(params, xs, cfg)
    buf = io.StringIO()
    invert.write_cdf_csv(results, buf)
    _emit(args, buf.getvalue())
    failed = any(math.isnan(r.cdf) for r in results)
    return EXIT_NUMERICAL if failed else EXIT_OK


def validation_suite(quick: bool, seed: int) -> list[tuple[str, Callable[[], oracle.McCheck]]]:
    """Named oracle checks; each entry runs one Monte Carlo comparison."""
    n = 10_000 if quick else 100_000
    z = 4.0 if quick else 3.0
    cfg = oracle.McConfig(n_paths=n, n_steps=2000, seed=seed)
    p_psi = OUParams(1.0, 0.0, 1.0, 1.0, 1.0)
    p_lq = OUParams(1.0, 1.0, 1.0, 1.0, 2.0)
    p_nm = OUParams(1.0, 0.0, 1.0, 1.0, 10.0)
    p_bar = OUParams(1.0, 0.5, 1.0, 0.0, 2.0)
    p_eq = OUParams(1.0, 0.0, 1.0, 1.0, 2.0)
    p_bias = OUParams(1.0, 0.0, 1.0, 1.0, 50.0)
    bias_cfg = oracle.McConfig(n_paths=n, n_steps=5000, seed=seed)

    def mean_check(name, analytic, params, functional, c=cfg):
        return lambda: oracle.check(
            name, analytic, lambda k: oracle.mc_functional_mean(params, functional, k), c, z
        )

    def est_check(name, analytic, params, kind, which, c=cfg):
        idx = 0 if which == "bias" else 1
        return lambda: oracle.check(
            name, analytic, lambda k: oracle.mc_estimator_stats(params, kind, k)[idx], c, z
        )

    args_psi = transform.MgfArgs(z1=0.3, z2=-0.2, v=0.4, mu=1.0)
    lam_hat = moments.lambda_hat_moments(p_bias)
    return [
        ("psi", mean_check(
            "psi(0.3,-0.2,0.4,1)", float(transform.psi(p_psi, args_psi)), p_psi,
            oracle.exp_linear_quadratic(0.0, 0.3, -0.2, 0.4, 1.0))),
        ("laplace_Q", mean_check(
            "laplace_Q(mu=0.3)", float(transform.laplace_Q(p_lq, 0.3)), p_lq,
            oracle.exp_linear_quadratic(1.0, mu=0.3))),
        ("cameron_martin", mean_check(
            "cameron_martin(mu=1,y=1,T=1)", float(transform.cameron_martin(1.0, 1.0, 1.0)),
            OUParams(0.0, 0.0, 1.0, 1.0, 1.0), oracle.exp_linear_quadratic(0.0, mu=1.0))),
        ("psi_bar", mean_check(
            "psi_bar(0.2,0.3,0.4)", float(transform.psi_bar(p_bar, 0.2, 0.3, 0.4)), p_bar,
            oracle.exp_bar_quadratic(0.2, 0.3, 0.4))),
        ("negative_moment_1", mean_check(
            "E[1/Q]", moments.negative_moment_Q(p_nm, 1), p_nm, oracle.inverse_Q_power(0.0, 1))),
        ("negative_moment_2", mean_check(
            "E[1/Q^2]", moments.negative_moment_Q(p_nm, 2), p_nm, oracle.inverse_Q_power(0.0, 2))),
        ("expected_Q", mean_check(
            "E[Q]", moments.expected_Q(p_eq), p_eq, oracle.q_value(0.0))),
        ("cdf", mean_check(
            "P(lambda_hat < 1)", invert.cdf_lambda_hat(p_nm, 1.0).cdf, p_nm,
            oracle.indicator_lambda_hat_below(0.0, 1.0))),
        ("alpha_hat_bias", est_check(
            "bias(alpha_hat)", 0.0, p_nm, "alpha_hat_given_lambda", "bias")),
        ("alpha_hat_mse", est_check(
            "mse(alpha_hat)", moments.alpha_hat_moments(p_nm)[1], p_nm, "alpha_hat_given_lambda", "mse")),
        ("lambda_hat_bias", est_check(
            "bias(lambda_hat) T=50", lam_hat.bias, p_bias, "lambda_hat_given_alpha", "bias", bias_cfg)),
        ("lambda_hat_mse", est_check(
            "mse(lambda_hat) T=50", lam_hat.mse, p_bias, "lambda_hat_given_alpha", "mse", bias_cfg)),
    ]


def cmd_validate(args) -> int:
    suite = validation_suite(args.quick, args.seed)
    if args.only:
        wanted = set(args.only.split(","))
        unknown = wanted - {name for name, _ in suite}
        if unknown:
            raise UsageError(f"unknown checks {sorted(unknown)}")
        suite = [(n, f) for n, f in suite if n in wanted]
    lines, ok = [], True
    for _, run in suite:
        res = run()
        ok = ok and res.passed
        lines.append(res.line())
        print(res.line(), flush=True)
    summary = f"{sum(l.startswith('PASS') for l in lines)}/{len(lines)} checks passed"
    print(summary)
    if args.out is not None:
        _emit(args, "\n".join(lines + [summary]) + "\n", [args.seed])
    return EXIT_OK if ok else EXIT_NUMERICAL


# ---------------------------------------------------------------------------
# parser


def _model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--y0", type=float, default=1.0)
    p.add_argument("--horizon", type=float, default=50.0)


def _quad_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rel-tol", type=float, default=1e-8)
    p.add_argument("--abs-tol", type=float, default=1e-12)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oufinite", description="Finite-sample moments of Ornstein-Uhlenbeck drift estimators."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate exact O-U paths to CSV")
    _model_flags(p)
    p.add_argument("--steps", type=int, default=5000)
    p.add_argument("--paths", type=int, default=1)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="estimate drift parameters from a path CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--known-alpha", type=float)
    p.add_argument("--known-lambda", type=float)
    p.add_argument("--sigma", type=float, default=1.0)
    _quad_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("table1", help="bias and mse of lambda_hat on the reference grid")
    _quad_flags(p)
    p.add_argument("--compare", action="store_true", help="diff against the vendored reference table")
    p.add_argument("--tolerance", type=float, default=0.001)
    p.add_argument("--out")
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("curves", help="scaled bias and mse curves f1(T), f2(T)")
    p.add_argument("--lambdas", default="1")
    p.add_argument("--alphas", default="-1,0,0.5,1")
    p.add_argument("--y0", type=float, default=1.0)
    p.add_argument("--t-grid")
    p.add_argument("--t-min", type=float, default=5.0)
    p.add_argument("--t-max", type=float, default=200.0)
    p.add_argument("--t-step", type=float, default=5.0)
    _quad_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("cdf", help="distribution function of lambda_hat")
    _model_flags(p)
    p.add_argument("--x", help="comma-separated evaluation points")
    p.add_argument("--x-min", type=float, default=0.0)
    p.add_argument("--x-max", type=float, default=3.0)
    p.add_argument("--x-count", type=int, default=31)
    p.add_argument("--method", choices=("fourier", "gaver_stehfest"), default="fourier")
    p.add_argument("--gs-order", type=int, default=14)
    p.add_argument("--out")
    p.set_defaults(func=cmd_cdf)

    p = sub.add_parser("validate", help="run the Monte Carlo oracle suite")
    p.add_argument("--quick", action="store_true", help="10^4 paths and |z| <= 4")
    p.add_argument("--seed", type=int, default=20240601)
    p.add_argument("--only", help="comma-separated subset of check names")
    p.add_argument("--out")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, MalformedInput, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OUError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
