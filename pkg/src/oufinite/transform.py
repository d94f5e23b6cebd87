"""Closed-form moment-generating functions of Ornstein-Uhlenbeck path functionals.

All functions here assume sigma = 1 (rescale first with
:func:`oufinite.model.rescale_to_unit_sigma`).  They accept real or complex
arguments and :class:`~oufinite.jet.Jet` values for ``lam`` and the MGF
arguments, so derivatives come out exactly from a single evaluation.

The joint MGF is obtained by a Girsanov change of measure to an auxiliary
O-U law with speed lambda0 = sqrt(lambda^2 + 2 mu) chosen to absorb the
int Y^2 term, after which only a Gaussian expectation in Y_T remains.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import jet as J
from .errors import NonzeroInitialValue, NotUnitSigma, OutsideConvergenceRegion
from .jet import Jet, value_of
from .model import OUParams, validate

__all__ = [
    "MgfArgs",
    "AuxiliaryShape",
    "BivariateGaussianSpec",
    "auxiliary_shape",
    "log_psi",
    "psi",
    "raw_joint_mgf",
    "laplace_Q",
    "cameron_martin",
    "gaussian_quadratic_mgf",
    "psi_bar",
    "log_psi_bar",
    "mgf_zeta",
    "decay_ratio",
    "tracked_sqrt",
]


@dataclass(frozen=True)
class MgfArgs:
    """Arguments of E exp{z1 Y_T + z2 int Y ds - v Y_T^2 - mu Q_T(alpha)}."""

    z1: object = 0.0
    z2: object = 0.0
    v: object = 0.0
    mu: object = 0.0


@dataclass(frozen=True)
class AuxiliaryShape:
    """Intermediate quantities of the change of measure.

    ``lambda0`` and ``alpha0`` define the auxiliary law, under which
    Y_T ~ N(m, d2); ``r`` and ``q`` are the linear and quadratic coefficients
    left on Y_T and ``log_D`` the log of the deterministic prefactor.
    ``den`` is 1 - 2 q d2, which must stay off the non-positive real axis.
    """

    lambda0: object
    alpha0: object
    r: object
    q: object
    m: object
    d2: object
    log_D: object
    den: object


@dataclass(frozen=True)
class BivariateGaussianSpec:
    m1: object
    m2: object
    d1: object
    d2: object
    d12: object


# ---------------------------------------------------------------------------
# numerically stable building blocks


def _f_moments(w, kmax: int):
    """F_k(w) = int_0^1 t^k exp(-w t) dt for k = 0..kmax (w real or complex array)."""
    w = np.asarray(w)
    small = np.abs(w) < 1.0
    ws = np.where(small, w, 0.0)
    wl = np.where(small, 1.0, w)
    # series branch
    series = []
    for k in range(kmax + 1):
        term = np.ones_like(ws, dtype=np.result_type(ws, float))
        acc = term / (k + 1)
        for j in range(1, 30):
            term = term * (-ws) / j
            acc = acc + term / (j + k + 1)
        series.append(acc)
    # recurrence branch
    e = np.exp(-wl)
    rec = [-np.expm1(-wl) / wl]
    for k in range(1, kmax + 1):
        rec.append((k * rec[-1] - e) / wl)
    return [np.where(small, s, r) for s, r in zip(series, rec)]


def _g_derivs(u, order: int):
    """Derivatives of g(u) = (1 - exp(-2u)) / (2u) = int_0^1 exp(-2ut) dt."""
    f = _f_moments(2 * np.asarray(u), order)
    return [(-2.0) ** k * f[k] for k in range(order + 1)]


def decay_ratio(u):
    """g(u) = (1 - exp(-2u)) / (2u), continuous through u = 0 (g(0) = 1)."""
    return J.apply_series(u, _g_derivs)


def _h3(u):
    """[u - 2(1 - e^{-u}) + (1 - e^{-2u})/2] / u^3, with h3(0) = 1/3.

    T^3 h3(lambda T) is the variance of int_0^T Y ds.
    """
    u = np.asarray(u)
    small = np.abs(u) < 0.5
    us = np.where(small, u, 0.0)
    ul = np.where(small, 1.0, u)
    acc = np.zeros_like(us, dtype=np.result_type(us, float))
    for k in range(3, 30):
        acc = acc + (-1) ** (k + 1) * (2.0 ** (k - 1) - 2.0) * us ** (k - 3) / math.factorial(k)
    direct = (ul + 2 * np.expm1(-ul) - 0.5 * np.expm1(-2 * ul)) / ul**3
    return np.where(small, acc, direct)


def _safe_div(num, den):
    """num / den with 0/0 -> 0 for plain arrays; jets divide directly."""
    if isinstance(num, Jet) or isinstance(den, Jet):
        return num / den
    num = np.asarray(num)
    den = np.asarray(den)
    zero = den == 0
    if not np.any(zero):
        return num / den
    return np.where(zero, 0.0, num / np.where(zero, 1.0, den))


def _is_zero(x) -> bool:
    return not isinstance(x, Jet) and np.ndim(x) == 0 and x == 0


def tracked_sqrt(z, axis: int = -1):
    """Square root continued along ``axis`` starting from the principal branch.

    The phase of ``z`` is unwrapped along the contour so that the result is
    continuous wherever consecutive samples differ in argument by less
    than pi.
    """
    z = np.asarray(z, dtype=complex)
    lg = np.log(z)
    phase = np.unwrap(lg.imag, axis=axis)
    return np.exp(0.5 * (lg.real + 1j * phase))


# ---------------------------------------------------------------------------
# joint MGF psi


def _require_unit_sigma(params: OUParams) -> None:
    validate(params)
    if params.sigma != 1.0:
        raise NotUnitSigma(
            f"transform code requires sigma == 1, got {params.sigma}; rescale first"
        )


def _shape(lam, alpha, y, T, z1, z2, v, mu, alpha0=None) -> AuxiliaryShape:
    """Change-of-measure quantities for E exp{z1 Y + z2 I - v Y^2 - mu int Y^2}."""
    lam2mu = lam * lam + 2 * mu
    if not isinstance(lam2mu, Jet) and not np.iscomplexobj(lam2mu) and np.any(np.asarray(lam2mu) < 0):
        # continuation below mu = -lambda^2 / 2: lambda0 turns imaginary
        lam2mu = np.asarray(lam2mu, dtype=complex)
    l0 = J.sqrt(lam2mu)
    lam_val = float(np.real(value_of(lam)))
    # lambda0 +- lambda without cancellation; their product is 2 mu
    if lam_val >= 0:
        s_plus = l0 + lam
        s_minus = _safe_div(2 * mu, s_plus)
    else:
        s_minus = l0 - lam
        s_plus = _safe_div(2 * mu, s_minus)
    if alpha0 is None:
        num = lam * lam * alpha + z2
        alpha0 = 0.0 if _is_zero(num) else _safe_div(num, l0 * l0)
    E1 = J.exp(-l0 * T)
    d2 = T * decay_ratio(l0 * T)
    q = 0.5 * s_minus - v
    if lam_val < 0:
        den = (s_plus + s_minus * E1 * E1) / (2 * l0) + 2 * v * d2
    else:
        den = 1 - (s_minus - 2 * v) * d2
    la0 = l0 * alpha0
    r = z1 + lam * alpha - la0
    m = alpha0 + (y - alpha0) * E1
    log_D = (la0 - lam * alpha) * y - 0.5 * s_minus * (y * y + T) + 0.5 * T * (
        la0 * la0 - lam * lam * alpha * alpha
    )
    return AuxiliaryShape(l0, alpha0, r, q, m, d2, log_D, den)


def _log_value(shape: AuxiliaryShape, unwrap: bool = False, check: bool = True):
    den = shape.den
    if check:
        _check_region(shape)
    expo = (shape.m * shape.r + shape.m * shape.m * shape.q + 0.5 * shape.r * shape.r * shape.d2) / den
    if unwrap:
        lg = np.log(np.asarray(value_of(den), dtype=complex))
        log_den = lg.real + 1j * np.unwrap(lg.imag, axis=-1)
        if isinstance(den, Jet):
            raise TypeError("branch tracking is only supported for plain arrays")
    else:
        log_den = J.log(den)
    return shape.log_D + expo - 0.5 * log_den


def _check_region(shape: AuxiliaryShape) -> None:
    den = np.asarray(value_of(shape.den))
    l0 = np.asarray(value_of(shape.lambda0))
    if np.iscomplexobj(den) or np.iscomplexobj(l0):
        if np.any(den == 0) or np.any(~np.isfinite(den)):
            raise OutsideConvergenceRegion("1 - 2 q d^2 vanishes on the requested arguments")
        return
    if np.any(~np.isfinite(l0)) or np.any(~(den > 0)):
        raise OutsideConvergenceRegion(
            "real evaluation outside the convergence region (1 - 2 q d^2 <= 0 "
            "or lambda^2 + 2 mu < 0)"
        )


def auxiliary_shape(params: OUParams, args: MgfArgs) -> AuxiliaryShape:
    """Change-of-measure quantities for the raw kernel in which mu multiplies int Y^2."""
    _require_unit_sigma(params)
    return _shape(
        params.lam, params.alpha, params.y0, params.horizon, args.z1, args.z2, args.v, args.mu
    )


def raw_joint_mgf(params: OUParams, args: MgfArgs, *, lam=None):
    """E exp{z1 Y_T + z2 int Y - v Y_T^2 - mu int Y^2} (mu on the uncentred square)."""
    _require_unit_sigma(params)
    lam = params.lam if lam is None else lam
    shape = _shape(lam, params.alpha, params.y0, params.horizon, args.z1, args.z2, args.v, args.mu)
    return J.exp(_log_value(shape))


def _in_natural_domain(args: MgfArgs) -> bool:
    vals = [np.asarray(value_of(a)) for a in (args.z1, args.z2, args.v, args.mu)]
    if any(np.iscomplexobj(a) and np.any(np.imag(a) != 0) for a in vals):
        return False
    return bool(np.all(np.real(vals[2]) >= 0) and np.all(np.real(vals[3]) >= 0))


def log_psi(
    params: OUParams,
    args: MgfArgs,
    *,
    lam=None,
    unwrap: bool = False,
    check: bool = True,
    continuation: bool = False,
):
    """log psi; see :func:`psi`.  ``unwrap`` tracks the branch of the square root
    along the last axis of the arguments (which must then be ordered along a
    contour starting near the origin)."""
    _require_unit_sigma(params)
    if not continuation and not _in_natural_domain(args):
        raise OutsideConvergenceRegion(
            "complex or negative (v, mu) arguments need continuation=True"
        )
    lam = params.lam if lam is None else lam
    alpha, T = params.alpha, params.horizon
    z1, z2, v, mu = args.z1, args.z2, args.v, args.mu
    # shift to X = Y - alpha, which is an O-U process with mean 0
    if not isinstance(lam, Jet) and all(_is_zero(a) for a in (z1, z2, v, mu)):
        # exponent and log-determinant cancel analytically at the origin
        return np.zeros(np.broadcast_shapes(*(np.shape(a) for a in (z1, z2, v, mu))))
    a = z1 - 2 * v * alpha
    shape = _shape(lam, 0.0, params.y0 - alpha, T, a, z2, v, mu)
    return z1 * alpha + z2 * alpha * T - v * alpha * alpha + _log_value(shape, unwrap, check)


def psi(
    params: OUParams,
    args: MgfArgs | None = None,
    *,
    lam=None,
    unwrap: bool = False,
    continuation: bool = False,
):
    """Joint MGF E exp{z1 Y_T + z2 int_0^T Y ds - v Y_T^2 - mu Q_T(alpha)}.

    Real arguments with v >= 0, mu >= 0 lie in the natural domain.  Complex
    or negative arguments are only accepted with ``continuation=True``; they
    are evaluated by analytic continuation and must keep 1 - 2 q d^2 off
    zero (real evaluations: strictly positive).
    ``lam`` overrides ``params.lam`` and may be a :class:`Jet` for exact
    lambda-derivatives.  The value at the origin is exactly 1.
    """
    args = MgfArgs() if args is None else args
    return J.exp(log_psi(params, args, lam=lam, unwrap=unwrap, continuation=continuation))


def laplace_Q(params: OUParams, mu, *, lam=None):
    """E exp{-mu Q_T(alpha)} for mu >= 0."""
    if np.any(np.asarray(np.real(value_of(mu))) < 0):
        raise OutsideConvergenceRegion("laplace_Q requires mu >= 0")
    return psi(params, MgfArgs(mu=mu), lam=lam)


def cameron_martin(mu, y: float, horizon: float):
    """E exp{-mu int_0^T (W_t + y)^2 dt} for standard Brownian motion W.

    exp{-sqrt(mu/2) y^2 tanh(sqrt(2 mu) T)} / sqrt(cosh(sqrt(2 mu) T)).
    """
    mu = np.asarray(mu, dtype=float)
    if np.any(mu < 0) or horizon <= 0:
        raise OutsideConvergenceRegion("cameron_martin requires mu >= 0 and T > 0")
    g = np.sqrt(2 * mu)
    z = g * horizon
    log_cosh = z + np.log1p(np.exp(-2 * z)) - math.log(2.0)
    out = np.exp(-np.sqrt(mu / 2) * y * y * np.tanh(z) - 0.5 * log_cosh)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# bivariate Gaussian quadratic-exponential expectation


def _log_gaussian_quadratic(spec: BivariateGaussianSpec, b1, b2, c1, c2, check: bool = True):
    m1, m2, d1, d2, d12 = spec.m1, spec.m2, spec.d1, spec.d2, spec.d12
    det_s = d1 * d2 - d12 * d12
    det_m = (1 - 2 * d1 * c1) * (1 - 2 * d2 * c2) - 4 * d12 * d12 * c1 * c2
    if check:
        dm = np.asarray(value_of(det_m))
        p22 = np.asarray(value_of(d2 - 2 * c1 * det_s))
        if not (np.iscomplexobj(dm) or np.iscomplexobj(p22)):
            if np.any(~(dm > 0)) or np.any(~(p22 > 0)):
                raise OutsideConvergenceRegion(
                    "Sigma^-1 - 2 diag(quad) is not positive definite"
                )
    # P = (Sigma^-1 - 2C)^-1 = (I - 2 Sigma C)^-1 Sigma, written out for 2x2
    p11 = (d1 - 2 * c2 * det_s) / det_m
    p22 = (d2 - 2 * c1 * det_s) / det_m
    p12 = d12 / det_m
    w1 = b1 + 2 * c1 * m1
    w2 = b2 + 2 * c2 * m2
    quad = w1 * w1 * p11 + 2 * w1 * w2 * p12 + w2 * w2 * p22
    return b1 * m1 + b2 * m2 + c1 * m1 * m1 + c2 * m2 * m2 + 0.5 * quad - 0.5 * J.log(det_m)


def gaussian_quadratic_mgf(spec: BivariateGaussianSpec, lin1, lin2, quad1, quad2):
    """E exp{lin1 xi1 + lin2 xi2 + quad1 xi1^2 + quad2 xi2^2} for (xi1, xi2) ~ N(m, Sigma).

    Requires Sigma^-1 - 2 diag(quad1, quad2) positive definite; with real
    inputs any violation raises :class:`OutsideConvergenceRegion`.
    """
    if np.any(np.asarray(value_of(spec.d1)) <= 0) or np.any(np.asarray(value_of(spec.d2)) <= 0):
        raise ValueError("variances must be positive")
    return J.exp(_log_gaussian_quadratic(spec, lin1, lin2, quad1, quad2))


# ---------------------------------------------------------------------------
# MGF of (Y_T, alpha_bar, Q_T(alpha_bar))


def bar_spec(lambda0, x, T) -> BivariateGaussianSpec:
    """Law of (X_T, I_T / T) for an O-U process with mean 0, speed lambda0, X_0 = x."""
    u = lambda0 * T
    E1 = np.exp(-u)
    g_half = decay_ratio(u / 2)  # (1 - e^{-u}) / u
    return BivariateGaussianSpec(
        m1=x * E1,
        m2=x * g_half,
        d1=T * decay_ratio(u),
        d2=T * _h3(u),
        d12=0.5 * T * g_half * g_half,
    )


def log_psi_bar(params: OUParams, z1, z2, mu):
    """log of E exp{z1 Y_T + z2 alpha_bar - mu Q_T(alpha_bar)}; see :func:`psi_bar`."""
    _require_unit_sigma(params)
    if params.lam <= 0:
        raise OutsideConvergenceRegion("psi_bar requires lambda > 0")
    if params.y0 != 0:
        raise NonzeroInitialValue("psi_bar is defined for Y_0 = 0")
    mu = np.asarray(mu, dtype=float)
    if np.any(mu < 0):
        raise OutsideConvergenceRegion("psi_bar requires mu >= 0")
    lam, alpha, T = params.lam, params.alpha, params.horizon
    x = params.y0 - alpha
    l0 = np.sqrt(lam * lam + 2 * mu)
    s_minus = 2 * mu / (l0 + lam)
    log_D = -0.5 * s_minus * (x * x + T)
    spec = bar_spec(l0, x, T)
    # Q_T(alpha_bar) = int X^2 - T xbar^2 is shift invariant; the Girsanov
    # step removes int X^2 and leaves +mu T xbar^2 and (lambda0-lambda)/2 X_T^2
    log_gq = _log_gaussian_quadratic(spec, z1, z2, 0.5 * s_minus, mu * T)
    return (z1 + z2) * alpha + log_D + log_gq


def psi_bar(params: OUParams, z1, z2, mu):
    """Joint MGF E exp{z1 Y_T + z2 alpha_bar_T - mu Q_T(alpha_bar_T)}, Y_0 = 0, lambda > 0.

    ``z1``/``z2`` may be jets in two variables, which yields every mixed
    moment E[Y_T^j alpha_bar^q exp(-mu Q)] at once.
    """
    return J.exp(log_psi_bar(params, z1, z2, mu))


# ---------------------------------------------------------------------------
# transform of zeta(x) = S_T(alpha) - x Q_T(alpha)


def mgf_zeta(params: OUParams, x: float, s, *, unwrap: bool = False):
    """E exp{s zeta(x)} with zeta(x) = S_T(alpha) - x Q_T(alpha).

    Uses S_T(alpha) = (T - (Y_T - alpha)^2 + (y - alpha)^2) / 2, so that
    s zeta = s(T/2 - alpha y + y^2/2) + s alpha Y_T - (s/2) Y_T^2 - s x Q_T.
    ``s`` may be complex (characteristic function on s = i t); pass a
    contour-ordered array with ``unwrap=True`` to keep the square root on
    the continuous branch.
    """
    _require_unit_sigma(params)
    alpha, y, T = params.alpha, params.y0, params.horizon
    s_arr = s if isinstance(s, Jet) else np.asarray(s)
    lp = log_psi(
        params, MgfArgs(z1=s_arr * alpha, z2=0.0, v=0.5 * s_arr, mu=s_arr * x),
        unwrap=unwrap, continuation=True,
    )
    return J.exp(s_arr * (0.5 * T - alpha * y + 0.5 * y * y) + lp)
