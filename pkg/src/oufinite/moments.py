"""Moments of the drift estimators obtained by integrating transforms over mu.

The identity E[N / Q^r] = (1/Gamma(r)) int_0^inf mu^(r-1) E[N exp(-mu Q)] dmu
turns every moment of a ratio estimator into a one-dimensional integral of
the closed-form MGFs in :mod:`oufinite.transform`.  Derivatives in lambda and
in the MGF arguments are taken with :class:`~oufinite.jet.Jet` arithmetic.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

import numpy as np

from .errors import LambdaZero, NonzeroInitialValue, OutsideConvergenceRegion, OUError
from .jet import Jet
from .model import OUParams, validate
from .quadrature import QuadratureConfig, QuadratureResult, integrate_semi_infinite
from .transform import _h3, _require_unit_sigma, decay_ratio, laplace_Q, log_psi_bar, MgfArgs

__all__ = [
    "AsymptoticConstants",
    "ASYMPTOTIC_CONSTANTS",
    "QuadratureConfig",
    "integrate_semi_infinite",
    "negative_moment_Q",
    "LambdaHatMoments",
    "lambda_hat_moments",
    "bias_lambda_hat",
    "mse_lambda_hat",
    "bias_derivative_lambda_hat",
    "expected_Q",
    "cramer_rao_lambda",
    "alpha_hat_moments",
    "alpha_bar_moments",
    "lambda_bar_moments",
    "limit_constants_check",
    "limit_constant_sequence",
    "CurveRow",
    "scaled_curves",
    "TableRow",
    "TABLE1_LAMBDAS",
    "TABLE1_ALPHAS",
    "TABLE1_HORIZONS",
    "table1",
    "write_moment_table",
]


@dataclass(frozen=True)
class AsymptoticConstants:
    """Reference constants of the lambda -> 0 scaling of bias and mse."""

    c0: float = 1.7814
    c1: float = 13.2857


ASYMPTOTIC_CONSTANTS = AsymptoticConstants()

TABLE1_LAMBDAS = (0.01, 0.1, 1.0)
TABLE1_ALPHAS = (-1.0, 0.0, 0.5, 1.0)
TABLE1_HORIZONS = (50.0, 75.0, 100.0, 125.0, 150.0, 175.0, 200.0)


def _mu_start(T: float) -> float:
    return 2.0 * (40.0 / T) ** 2


def _breakpoints(lam: float, T: float) -> list[float]:
    """Geometric seeds below mu_start.

    For lambda < 0 the integrands change on the scale mu ~ lambda^2 exp(-2|lambda| T),
    far below anything a uniform start partition resolves.
    """
    start = _mu_start(T)
    floor = start * 1e-6
    if lam < 0:
        floor = max(min(floor, lam * lam * math.exp(-2 * abs(lam) * T) * 1e-3), 1e-300)
    pts = []
    mu = start / 4
    while mu > floor and len(pts) < 400:
        pts.append(mu)
        mu /= 4
    return pts


def _integrate(f, params: OUParams, cfg: QuadratureConfig) -> QuadratureResult:
    return integrate_semi_infinite(
        f, cfg, mu_start=_mu_start(params.horizon), breakpoints=_breakpoints(params.lam, params.horizon)
    )


# ---------------------------------------------------------------------------
# negative moments of Q_T(alpha) and the lambda_hat moments


def negative_moment_Q(params: OUParams, p: float, cfg: QuadratureConfig = QuadratureConfig()) -> float:
    """E[Q_T(alpha)^-p] = (1/Gamma(p)) int_0^inf mu^(p-1) E exp(-mu Q_T) dmu.

    For p < 1 the endpoint singularity is removed by mu = u^(1/p).
    """
    _require_unit_sigma(params)
    if not p > 0:
        raise ValueError("p must be positive")
    if p < 1:
        f = lambda u: laplace_Q(params, u ** (1.0 / p)) / p
        res = integrate_semi_infinite(f, cfg, mu_start=_mu_start(params.horizon) ** p)
    else:
        f = lambda mu: mu ** (p - 1) * laplace_Q(params, mu)
        res = _integrate(f, params, cfg)
    return res.value / math.gamma(p)


@dataclass(frozen=True)
class LambdaHatMoments:
    bias: float
    mse: float
    bias_error: float
    mse_error: float


def _lam_jet(params: OUParams, order: int) -> Jet:
    return Jet.variable(params.lam, 0, nvar=1, order=order)


def lambda_hat_moments(params: OUParams, cfg: QuadratureConfig = QuadratureConfig()) -> LambdaHatMoments:
    """Bias and mse of lambda_hat(alpha) in one quadrature pass.

    bias = int d/dlambda psi(0,0,0,mu) dmu and
    mse = int (psi + mu d^2/dlambda^2 psi) dmu, with exact jet derivatives.
    Existence of the moments (finite E[Q^-2]) is assumed, not checked.
    """
    _require_unit_sigma(params)
    lam = _lam_jet(params, 2)

    def f(mu):
        d = laplace_Q(params, mu, lam=lam).derivatives()
        return np.stack([d[1], d[0] + mu * d[2]])

    res = _integrate(f, params, cfg)
    v, e = res.value, res.error
    return LambdaHatMoments(float(v[0]), float(v[1]), float(e[0]), float(e[1]))


def bias_lambda_hat(params: OUParams, cfg: QuadratureConfig = QuadratureConfig()) -> float:
    """E[lambda_hat(alpha)] - lambda."""
    return lambda_hat_moments(params, cfg).bias


def mse_lambda_hat(params: OUParams, cfg: QuadratureConfig = QuadratureConfig()) -> float:
    """E[(lambda_hat(alpha) - lambda)^2]."""
    return lambda_hat_moments(params, cfg).mse


def bias_derivative_lambda_hat(params: OUParams, cfg: QuadratureConfig = QuadratureConfig()) -> float:
    """d/dlambda bias(lambda_hat) = int d^2/dlambda^2 psi(0,0,0,mu) dmu."""
    _require_unit_sigma(params)
    lam = _lam_jet(params, 2)
    f = lambda mu: laplace_Q(params, mu, lam=lam).deriv((2,))
    return float(_integrate(f, params, cfg).value)


# ---------------------------------------------------------------------------
# closed forms


def _half_one_minus_g(u):
    """(1 - g(u)) / (2u), with value 1/2 at u = 0."""
    u = np.asarray(u, dtype=float)
    small = np.abs(u) < 0.25
    us = np.where(small, u, 0.0)
    acc = np.zeros_like(us)
    for k in range(1, 25):
        acc = acc + (-1) ** (k + 1) * (2 * us) ** (k - 1) / math.factorial(k + 1)
    ul = np.where(small, 1.0, u)
    direct = (1 - decay_ratio(ul)) / (2 * ul)
    return np.where(small, acc, direct)


def expected_Q(params: OUParams) -> float:
    """E[Q_T(alpha)] = T/(2 lam) - (1 - e^{-2 lam T})/(4 lam^2) + (y-alpha)^2 (1 - e^{-2 lam T})/(2 lam).

    Evaluated as T^2 h(lam T) + (y-alpha)^2 T g(lam T), continuous at lam = 0
    (where it equals T^2/2 + (y-alpha)^2 T).  Scales with sigma^2.
    """
    validate(params)
    T, lam = params.horizon, params.lam
    x2 = (params.y0 - params.alpha) ** 2
    s2 = params.sigma**2
    u = lam * T
    return float(s2 * T * T * _half_one_minus_g(u) + x2 * T * decay_ratio(u))


def cramer_rao_lambda(params: OUParams, bias_derivative: float) -> float:
    """Lower bound (1 + d bias/d lambda)^2 / E[Q_T(alpha)] on the mse of lambda_hat."""
    eq = expected_Q(params)
    if not eq > 0:
        raise ValueError("E[Q_T] must be positive")
    return (1.0 + bias_derivative) ** 2 / eq


def alpha_hat_moments(params: OUParams) -> tuple[float, float]:
    """(bias, mse) of alpha_hat(lambda) = alpha + W_T/(lambda T): (0, sigma^2/(lambda^2 T))."""
    validate(params)
    if params.lam == 0:
        raise LambdaZero("alpha_hat is undefined at lambda = 0")
    return 0.0, params.sigma**2 / (params.lam**2 * params.horizon)


@dataclass(frozen=True)
class AlphaBarMoments:
    mean: float
    variance: float
    asymptotic_ref: float | None

    def __iter__(self):
        yield self.mean
        yield self.variance


def alpha_bar_moments(params: OUParams) -> AlphaBarMoments:
    """Mean and variance of alpha_bar = (1/T) int Y ds.

    mean = alpha + (y - alpha)(1 - e^{-lam T})/(lam T) and
    variance = sigma^2 T h3(lam T); both continuous through lam = 0.
    ``asymptotic_ref`` is sigma^2/(lam^2 T) (None at lam = 0).
    """
    validate(params)
    lam, T = params.lam, params.horizon
    u = lam * T
    mean = params.alpha + (params.y0 - params.alpha) * float(decay_ratio(u / 2))
    var = params.sigma**2 * T * float(_h3(u))
    ref = None if lam == 0 else params.sigma**2 / (lam * lam * T)
    return AlphaBarMoments(mean, var, ref)


# ---------------------------------------------------------------------------
# lambda_bar: both parameters unknown


def _lambda_bar_integrand(params: OUParams, numerator_pairing: str = "mixed"):
    T = params.horizon
    order = 4

    def f(mu):
        z1 = Jet.variable(np.zeros_like(mu), 0, nvar=2, order=order)
        z2 = Jet.variable(np.zeros_like(mu), 1, nvar=2, order=order)
        jet = log_psi_bar(params, z1, z2, mu).exp()
        d = lambda a, b: jet.deriv((a, b))
        cross = d(1, 1) if numerator_pairing == "mixed" else d(0, 2)
        # N = (T - Y^2 + 2 abar Y)/2 at y = 0; E[Y^j abar^k e^{-mu Q}] = d^j_z1 d^k_z2 Psi
        first = 0.5 * T * d(0, 0) - 0.5 * d(2, 0) + cross
        second = 0.25 * (
            T * T * d(0, 0)
            + d(4, 0)
            + 4 * d(2, 2)
            - 2 * T * d(2, 0)
            + 4 * T * d(1, 1)
            - 4 * d(3, 1)
        )
        return np.stack([first, mu * second])

    return f


@dataclass(frozen=True)
class LambdaBarMoments:
    bias: float
    mse: float
    mean: float
    second_moment: float
    error: tuple[float, float]

    def __iter__(self):
        yield self.bias
        yield self.mse


def lambda_bar_moments(params: OUParams, cfg: QuadratureConfig = QuadratureConfig()) -> LambdaBarMoments:
    """Bias and mse of lambda_bar = N / Q_T(alpha_bar) for Y_0 = 0, lambda > 0.

    E[N/Q] = int E[N e^{-mu Q}] dmu and E[N^2/Q^2] = int mu E[N^2 e^{-mu Q}] dmu,
    where N^2 is expanded into mixed moments of (Y_T, alpha_bar) read off a
    fourth-order jet of Psi.
    """
    _require_unit_sigma(params)
    if params.y0 != 0:
        raise NonzeroInitialValue("lambda_bar moments are derived for Y_0 = 0")
    if not params.lam > 0:
        raise OutsideConvergenceRegion("lambda_bar moments require lambda > 0")
    res = _integrate(_lambda_bar_integrand(params), params, cfg)
    mean, second = (float(v) for v in res.value)
    lam = params.lam
    return LambdaBarMoments(
        bias=mean - lam,
        mse=second - 2 * lam * mean + lam * lam,
        mean=mean,
        second_moment=second,
        error=tuple(float(e) for e in res.error),
    )


# ---------------------------------------------------------------------------
# lambda -> 0 constants, scaled curves and the reference table


def limit_constant_sequence(
    horizons: Sequence[float] = (50.0, 100.0, 200.0), cfg: QuadratureConfig = QuadratureConfig()
) -> list[tuple[float, float, float]]:
    """(T, T * bias, T^2 * mse) at lambda = 0, alpha = 0, y = 0.

    At lambda = 0 the process is a Brownian motion and Brownian scaling makes
    T * bias and T^2 * mse exactly independent of T.
    """
    out = []
    for T in horizons:
        m = lambda_hat_moments(OUParams(0.0, 0.0, 1.0, 0.0, T), cfg)
        out.append((T, T * m.bias, T * T * m.mse))
    return out


def limit_constants_check(cfg: QuadratureConfig = QuadratureConfig()) -> tuple[float, float]:
    """Estimates (c0, c1) of lim bias * T and lim mse * T^2 as lambda -> 0, from the largest horizon."""
    seq = limit_constant_sequence((50.0, 100.0, 200.0), cfg)
    return seq[-1][1], seq[-1][2]


@dataclass(frozen=True)
class CurveRow:
    lam: float
    alpha: float
    horizon: float
    f1: float
    f2: float
    err: str = ""


def scaled_curves(
    params: OUParams, t_grid: Iterable[float], cfg: QuadratureConfig = QuadratureConfig()
) -> list[CurveRow]:
    """f1(T) = T bias(lambda_hat), f2(T) = (T/lambda) mse(lambda_hat) on ``t_grid``.

    ``params.horizon`` is ignored.  Quadrature failures are reported per row.
    """
    if params.lam == 0:
        raise LambdaZero("f2 divides by lambda")
    rows = []
    for T in t_grid:
        p = OUParams(params.lam, params.alpha, params.sigma, params.y0, float(T))
        try:
            m = lambda_hat_moments(p, cfg)
            rows.append(CurveRow(p.lam, p.alpha, p.horizon, T * m.bias, T / p.lam * m.mse))
        except OUError as exc:
            rows.append(CurveRow(p.lam, p.alpha, p.horizon, math.nan, math.nan, type(exc).__name__))
    return rows


@dataclass(frozen=True)
class TableRow:
    lam: float
    alpha: float
    horizon: float
    bias: float
    mse: float
    cr_bound: float
    f1: float
    f2: float
    quad_err_bias: float
    quad_err_mse: float
    err: str = ""

    def as_csv(self) -> dict:
        return {
            "lambda": self.lam,
            "alpha": self.alpha,
            "T": self.horizon,
            "bias": self.bias,
            "mse": self.mse,
            "cr_bound": self.cr_bound,
            "f1": self.f1,
            "f2": self.f2,
            "quad_err_bias": self.quad_err_bias,
            "quad_err_mse": self.quad_err_mse,
            "err": self.err,
        }


TABLE_COLUMNS = (
    "lambda", "alpha", "T", "bias", "mse", "cr_bound", "f1", "f2", "quad_err_bias", "quad_err_mse", "err",
)


def moment_row(params: OUParams, cfg: QuadratureConfig = QuadratureConfig()) -> TableRow:
    """Bias, mse, Cramer-Rao bound and scaled values of lambda_hat at ``params``."""
    T, lam = params.horizon, params.lam
    try:
        m = lambda_hat_moments(params, cfg)
        cr = cramer_rao_lambda(params, bias_derivative_lambda_hat(params, cfg))
    except OUError as exc:
        nan = math.nan
        return TableRow(lam, params.alpha, T, nan, nan, nan, nan, nan, nan, nan, type(exc).__name__)
    f2 = T / lam * m.mse if lam != 0 else math.nan
    return TableRow(lam, params.alpha, T, m.bias, m.mse, cr, T * m.bias, f2, m.bias_error, m.mse_error)


def table1(
    cfg: QuadratureConfig = QuadratureConfig(),
    lambdas: Sequence[float] = TABLE1_LAMBDAS,
    alphas: Sequence[float] = TABLE1_ALPHAS,
    horizons: Sequence[float] = TABLE1_HORIZONS,
    y0: float = 1.0,
) -> list[TableRow]:
    """Bias and mse of lambda_hat over the (lambda, alpha, T) grid, sigma = 1."""
    return [
        moment_row(OUParams(lam, a, 1.0, y0, T), cfg)
        for lam in lambdas
        for a in alphas
        for T in horizons
    ]


def write_moment_table(rows: Iterable[TableRow], fh: TextIO) -> None:
    w = csv.DictWriter(fh, fieldnames=TABLE_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.as_csv().items()})
