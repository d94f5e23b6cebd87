"""Alternative closed forms that the package does not use.

Each function here is a competing expression for a quantity that the main
modules compute differently.  They are kept so the test suite and
``oufinite validate`` can show by simulation which expression describes the
process; none of them is called by the library itself.
"""

from __future__ import annotations

import math

import numpy as np

from .model import OUParams
from .quadrature import QuadratureConfig
from .transform import MgfArgs, _log_value, _require_unit_sigma, _shape
from . import jet as J

__all__ = [
    "laplace_Q_kappa",
    "raw_joint_mgf_shifted_alpha0",
    "expected_Q_reciprocal_term",
    "cameron_martin_eighth",
    "lambda_bar_expanded_numerator",
    "lambda_bar_mean_double_z2",
]


def laplace_Q_kappa(params: OUParams, mu):
    """E exp(-mu Q_T) written with kappa = sqrt(2 lambda + mu^2) in place of sqrt(lambda^2 + 2 mu)."""
    _require_unit_sigma(params)
    lam, T = params.lam, params.horizon
    x = params.y0 - params.alpha
    mu = np.asarray(mu, dtype=float)
    k = np.sqrt(2 * lam + mu * mu)
    e2 = np.exp(-2 * k * T)
    den = 1 + (lam - k) / (2 * k) * (1 - e2)
    expo = (lam - k) * T / (2 * k) + 0.5 * x * x * (lam - k + 2 * e2 / den)
    return np.exp(expo) / np.sqrt(den)


def raw_joint_mgf_shifted_alpha0(params: OUParams, args: MgfArgs):
    """E exp{z1 Y_T + z2 int Y - v Y_T^2 - mu int Y^2} with alpha0 = alpha + z2 / lambda0^2.

    The correct centre of the auxiliary law is (lambda^2 alpha + z2) / lambda0^2;
    only that one value is swapped here.
    """
    _require_unit_sigma(params)
    l0sq = params.lam**2 + 2 * np.asarray(args.mu)
    alpha0 = params.alpha + args.z2 / l0sq
    shape = _shape(
        params.lam, params.alpha, params.y0, params.horizon, args.z1, args.z2, args.v, args.mu, alpha0=alpha0
    )
    return J.exp(_log_value(shape))


def expected_Q_reciprocal_term(params: OUParams) -> float:
    """(1/(2 lam)) [T + (1 - e^{-2 lam T})/(2 lam T) + (y - alpha)^2 (1 - e^{-2 lam T})]."""
    lam, T = params.lam, params.horizon
    x2 = (params.y0 - params.alpha) ** 2
    e = -math.expm1(-2 * lam * T)
    return (T + e / (2 * lam * T) + x2 * e) / (2 * lam)


def cameron_martin_eighth(mu, y: float, horizon: float):
    """exp{-sqrt(mu/8) y^2 tanh(sqrt(2 mu) T)} / sqrt(cosh(sqrt(2 mu) T))."""
    mu = np.asarray(mu, dtype=float)
    z = np.sqrt(2 * mu) * horizon
    return np.exp(-np.sqrt(mu / 8) * y * y * np.tanh(z)) / np.sqrt(np.cosh(z))


def lambda_bar_expanded_numerator(stats):
    """(T - Y_T^2 - 2 abar Y_T - 2 int Y^2 + y^2) / (2 Q_T(abar)) on stats or a stats batch."""
    T = stats.horizon
    abar = stats.i_T / T
    num = T - stats.y_T**2 - 2 * abar * stats.y_T - 2 * stats.j_T + stats.y0**2
    return num / (2 * stats.q_of_alpha(abar))


def lambda_bar_mean_double_z2(params: OUParams, cfg: QuadratureConfig = QuadratureConfig()) -> float:
    """E[lambda_bar] with the cross moment E[abar Y_T / Q] replaced by E[abar^2 / Q]."""
    from .moments import _integrate, _lambda_bar_integrand

    return float(_integrate(_lambda_bar_integrand(params, "z2z2"), params, cfg).value[0])
