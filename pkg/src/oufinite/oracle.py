"""Monte Carlo oracle for the analytic results.

Every estimate carries a batch-means standard error (100 batches by
default), which stays honest for heavy-tailed functionals such as 1/Q.
A check compares an estimate with an analytic value through its z-score
and, if |z| exceeds the threshold, reruns once with four times as many
paths before declaring failure.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import estimate as est
from .errors import DegenerateQ, ValidationError
from .model import ESTIMATOR_KINDS, OUParams, validate
from .simulate import SimConfig, StatsBatch, _simulate_block, simulate_stats, trapezoid_stats

__all__ = [
    "McConfig",
    "McReport",
    "McCheck",
    "Functional",
    "batch_means",
    "exp_linear_quadratic",
    "exp_raw_quadratic",
    "exp_bar_quadratic",
    "exp_zeta",
    "inverse_Q_power",
    "q_value",
    "indicator_lambda_hat_below",
    "estimator_values",
    "mc_estimator_stats",
    "mc_functional_mean",
    "SweepRow",
    "mc_discretization_sweep",
    "check",
]


@dataclass(frozen=True)
class McConfig:
    """Oracle scale.  ``n_steps=None`` uses 5000 steps up to T = 50 and 100 T beyond."""

    n_paths: int = 100_000
    n_steps: int | None = None
    seed: int = 20240601
    n_batches: int = 100
    chunk: int = 2000

    def steps_for(self, horizon: float) -> int:
        if self.n_steps is not None:
            return self.n_steps
        return 5000 if horizon <= 50 else int(math.ceil(100 * horizon))

    def sim_config(self, horizon: float) -> SimConfig:
        return SimConfig(self.steps_for(horizon), self.seed, self.n_paths)

    def scaled(self, factor: int) -> "McConfig":
        return replace(self, n_paths=self.n_paths * factor)


@dataclass(frozen=True)
class McReport:
    estimate: float
    std_error: float
    n_paths: int
    n_steps: int
    seed: int
    target: str
    analytic: float | None = None
    z_score: float | None = None
    excluded: int = 0

    def with_analytic(self, value: float) -> "McReport":
        z = (self.estimate - value) / self.std_error if self.std_error > 0 else (
            0.0 if self.estimate == value else math.inf
        )
        return replace(self, analytic=float(value), z_score=float(z))

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def batch_means(values: np.ndarray, n_batches: int = 100) -> tuple[float, float]:
    """Sample mean and its batch-means standard error."""
    values = np.asarray(values, dtype=float)
    n = values.size
    if n < 2:
        raise ValueError("need at least two samples")
    b = min(n_batches, n)
    means = np.array([chunk.mean() for chunk in np.array_split(values, b)])
    sizes = np.array([chunk.size for chunk in np.array_split(values, b)])
    mean = float(np.dot(means, sizes) / n)
    se = float(np.sqrt(np.sum(sizes * (means - mean) ** 2) / (b - 1) / n))
    return mean, se


# ---------------------------------------------------------------------------
# path functionals


@dataclass(frozen=True)
class Functional:
    """A named map from (unit-sigma) sufficient statistics to per-path values."""

    name: str
    fn: Callable[[StatsBatch], np.ndarray] = field(compare=False)

    def __call__(self, stats: StatsBatch) -> np.ndarray:
        return self.fn(stats)


def exp_linear_quadratic(alpha: float, z1=0.0, z2=0.0, v=0.0, mu=0.0) -> Functional:
    """exp{z1 Y_T + z2 int Y - v Y_T^2 - mu Q_T(alpha)}."""
    return Functional(
        f"exp_linear_quadratic(z1={z1},z2={z2},v={v},mu={mu})",
        lambda s: np.exp(z1 * s.y_T + z2 * s.i_T - v * s.y_T**2 - mu * s.q_of_alpha(alpha)),
    )


def exp_raw_quadratic(z1=0.0, z2=0.0, v=0.0, mu=0.0) -> Functional:
    """exp{z1 Y_T + z2 int Y - v Y_T^2 - mu int Y^2}."""
    return Functional(
        f"exp_raw_quadratic(z1={z1},z2={z2},v={v},mu={mu})",
        lambda s: np.exp(z1 * s.y_T + z2 * s.i_T - v * s.y_T**2 - mu * s.j_T),
    )


def exp_bar_quadratic(z1=0.0, z2=0.0, mu=0.0) -> Functional:
    """exp{z1 Y_T + z2 alpha_bar - mu Q_T(alpha_bar)}."""

    def fn(s):
        abar = s.i_T / s.horizon
        return np.exp(z1 * s.y_T + z2 * abar - mu * s.q_of_alpha(abar))

    return Functional(f"exp_bar_quadratic(z1={z1},z2={z2},mu={mu})", fn)


def exp_zeta(alpha: float, x: float, s_arg: float) -> Functional:
    """exp{s zeta(x)} with zeta(x) = S_T(alpha) - x Q_T(alpha)."""
    return Functional(
        f"exp_zeta(x={x},s={s_arg})",
        lambda s: np.exp(s_arg * (s.s_of_alpha(alpha) - x * s.q_of_alpha(alpha))),
    )


def inverse_Q_power(alpha: float, p: float) -> Functional:
    return Functional(f"inverse_Q_power({p})", lambda s: s.q_of_alpha(alpha) ** (-p))


def q_value(alpha: float) -> Functional:
    return Functional("Q_T", lambda s: s.q_of_alpha(alpha))


def indicator_lambda_hat_below(alpha: float, x: float) -> Functional:
    return Functional(
        f"indicator_lambda_hat_below({x})",
        lambda s: (s.s_of_alpha(alpha) - x * s.q_of_alpha(alpha) < 0).astype(float),
    )


def _unit_stats(params: OUParams, cfg: McConfig) -> StatsBatch:
    validate(params)
    stats = simulate_stats(params, cfg.sim_config(params.horizon), chunk=cfg.chunk)
    return stats if params.sigma == 1.0 else stats.scaled(params.sigma)


def mc_functional_mean(
    params: OUParams, functional: Functional, cfg: McConfig = McConfig(), analytic: float | None = None
) -> McReport:
    """MC mean of ``functional`` over exact paths, evaluated on sigma-rescaled statistics."""
    stats = _unit_stats(params, cfg)
    vals = functional(stats)
    mean, se = batch_means(vals, cfg.n_batches)
    rep = McReport(mean, se, cfg.n_paths, cfg.steps_for(params.horizon), cfg.seed, functional.name)
    return rep if analytic is None else rep.with_analytic(analytic)


# ---------------------------------------------------------------------------
# estimators


def estimator_values(params: OUParams, kind: str, stats: StatsBatch) -> tuple[np.ndarray, float, np.ndarray]:
    """(estimates, true value, kept mask) of ``kind`` on unit-sigma ``stats``.

    alpha-type estimates are mapped back to the original scale.
    """
    if kind not in ESTIMATOR_KINDS:
        raise ValidationError("estimator_kind", f"unknown kind {kind!r}")
    sig = params.sigma
    a_unit = params.alpha / sig
    keep = np.ones(len(stats), dtype=bool)
    if kind == "lambda_hat_given_alpha":
        keep = stats.q_of_alpha(a_unit) > 0
        vals = est.mle_lambda_given_alpha(stats.subset(keep), a_unit)
        return np.asarray(vals), params.lam, keep
    if kind == "lambda_bar":
        keep = stats.q_of_alpha(stats.i_T / stats.horizon) > 0
        return np.asarray(est.lambda_bar(stats.subset(keep))), params.lam, keep
    if kind == "alpha_hat_given_lambda":
        return np.asarray(est.mle_alpha_given_lambda(stats, params.lam)) * sig, params.alpha, keep
    return np.asarray(est.alpha_bar(stats)) * sig, params.alpha, keep


def mc_estimator_stats(
    params: OUParams,
    kind: str,
    cfg: McConfig = McConfig(),
    analytic_bias: float | None = None,
    analytic_mse: float | None = None,
) -> tuple[McReport, McReport]:
    """Sample bias and mse of estimator ``kind``.

    Paths with a vanishing quadratic characteristic are excluded and counted
    in ``excluded``.
    """
    stats = _unit_stats(params, cfg)
    vals, truth, keep = estimator_values(params, kind, stats)
    err = vals - truth
    n_ex = int(np.count_nonzero(~keep))
    steps = cfg.steps_for(params.horizon)
    b, b_se = batch_means(err, cfg.n_batches)
    m, m_se = batch_means(err * err, cfg.n_batches)
    bias = McReport(b, b_se, cfg.n_paths, steps, cfg.seed, f"bias({kind})", excluded=n_ex)
    mse = McReport(m, m_se, cfg.n_paths, steps, cfg.seed, f"mse({kind})", excluded=n_ex)
    if analytic_bias is not None:
        bias = bias.with_analytic(analytic_bias)
    if analytic_mse is not None:
        mse = mse.with_analytic(analytic_mse)
    return bias, mse


@dataclass(frozen=True)
class SweepRow:
    n_steps: int
    bias: float
    bias_se: float
    mse: float
    mse_se: float


def mc_discretization_sweep(
    params: OUParams, kind: str, steps_grid: Sequence[int], cfg: McConfig = McConfig()
) -> list[SweepRow]:
    """Bias and mse per grid resolution, all computed from the same paths.

    The paths are simulated once at the finest resolution; coarser grids are
    exact subsamples of them (the transition is exact), so differences
    between rows isolate the trapezoid error.
    """
    validate(params)
    steps = [int(n) for n in steps_grid]
    if any(b <= a for a, b in zip(steps, steps[1:])):
        raise ValueError("steps_grid must be strictly increasing")
    finest = steps[-1]
    if any(finest % n for n in steps):
        raise ValueError("every resolution must divide the finest one")
    errs = {n: np.empty(cfg.n_paths) for n in steps}
    for first in range(0, cfg.n_paths, cfg.chunk):
        count = min(cfg.chunk, cfg.n_paths - first)
        block = _simulate_block(params, finest, cfg.seed, first, count)
        for n in steps:
            sub = block[:, :: finest // n]
            i_T, j_T = trapezoid_stats(sub, params.horizon)
            stats = StatsBatch(sub[:, -1], i_T, j_T, params.y0, params.horizon)
            if params.sigma != 1.0:
                stats = stats.scaled(params.sigma)
            vals, truth, keep = estimator_values(params, kind, stats)
            if not np.all(keep):
                raise DegenerateQ("degenerate path in discretisation sweep")
            errs[n][first:first + count] = vals - truth
    rows = []
    for n in steps:
        b, b_se = batch_means(errs[n], cfg.n_batches)
        m, m_se = batch_means(errs[n] ** 2, cfg.n_batches)
        rows.append(SweepRow(n, b, b_se, m, m_se))
    return rows


def richardson_limit(rows: Sequence[SweepRow]) -> float:
    """First-order extrapolation 2 b(n) - b(n/2) from the two finest rows."""
    if len(rows) < 2 or rows[-1].n_steps != 2 * rows[-2].n_steps:
        raise ValueError("need two finest resolutions in ratio 2")
    return 2 * rows[-1].bias - rows[-2].bias


# ---------------------------------------------------------------------------
# checks with the retry policy


@dataclass(frozen=True)
class McCheck:
    name: str
    passed: bool
    report: McReport
    retried: bool
    z_max: float

    def line(self) -> str:
        r = self.report
        status = "PASS" if self.passed else "FAIL"
        retry = " (after 4x retry)" if self.retried else ""
        return (
            f"{status} {self.name}: mc={r.estimate:.6g} se={r.std_error:.2g} "
            f"analytic={r.analytic:.6g} z={r.z_score:+.2f}{retry}"
        )


def check(
    name: str,
    analytic: float,
    run: Callable[[McConfig], McReport],
    cfg: McConfig = McConfig(),
    z_max: float = 3.0,
    retry: bool = True,
) -> McCheck:
    """Run ``run(cfg)`` against ``analytic``; rerun once with 4x paths if |z| > z_max."""
    rep = run(cfg).with_analytic(analytic)
    if abs(rep.z_score) <= z_max or not retry:
        return McCheck(name, abs(rep.z_score) <= z_max, rep, False, z_max)
    rep = run(cfg.scaled(4)).with_analytic(analytic)
    return McCheck(name, abs(rep.z_score) <= z_max, rep, True, z_max)
