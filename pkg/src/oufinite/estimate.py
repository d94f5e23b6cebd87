"""Maximum-likelihood drift estimators computed from sufficient statistics.

All estimators take a :class:`~oufinite.model.SufficientStats` (or a
:class:`~oufinite.simulate.StatsBatch`, in which case they return arrays).
The stochastic integral int (alpha - Y) dY is always replaced by its Ito
closed form, so nothing here depends on a discretised Ito sum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateQ, LambdaZero, NonFiniteField

__all__ = [
    "LikelihoodRatioArgs",
    "mle_lambda_given_alpha",
    "mle_alpha_given_lambda",
    "alpha_bar",
    "lambda_bar",
    "log_likelihood_ratio",
]


def _as_output(x):
    return float(x) if np.ndim(x) == 0 else x


def _check_q(q):
    if np.any(np.asarray(q) <= 0):
        raise DegenerateQ("Q_T vanishes: the path is constant at the reference level")


def mle_lambda_given_alpha(stats, alpha: float):
    """lambda_hat(alpha) = S_T(alpha) / Q_T(alpha)
    = (T - Y_T^2 + 2 alpha Y_T - 2 alpha y0 + y0^2) / (2 Q_T(alpha)).

    Raises
    ------
    DegenerateQ
        If Q_T(alpha) = 0.
    """
    q = stats.q_of_alpha(alpha)
    _check_q(q)
    return _as_output(stats.s_of_alpha(alpha) / q)


def mle_alpha_given_lambda(stats, lam: float):
    """alpha_hat(lambda) = (Y_T - y0 + lambda int Y) / (lambda T)."""
    if lam == 0:
        raise LambdaZero("alpha_hat(lambda) requires lambda != 0")
    return _as_output((stats.y_T - stats.y0 + lam * stats.i_T) / (lam * stats.horizon))


def alpha_bar(stats):
    """Time average (1/T) int Y ds."""
    return _as_output(stats.i_T / stats.horizon)


def lambda_bar(stats):
    """lambda_hat evaluated at the plug-in mean alpha_bar, for both parameters unknown."""
    return mle_lambda_given_alpha(stats, alpha_bar(stats))


@dataclass(frozen=True)
class LikelihoodRatioArgs:
    """Numerator (lam, alpha) and reference (lam0, alpha0) drift parameters."""

    lam: float
    alpha: float
    lam0: float
    alpha0: float

    def __post_init__(self):
        for name in ("lam", "alpha", "lam0", "alpha0"):
            if not np.isfinite(getattr(self, name)):
                raise NonFiniteField(name, "must be finite")


def log_likelihood_ratio(stats, args: LikelihoodRatioArgs):
    """log dP_{lam,alpha} / dP_{lam0,alpha0} on the observed record (sigma = 1).

    lam S_T(alpha) - lam0 S_T(alpha0) - (lam^2 Q_T(alpha) - lam0^2 Q_T(alpha0)) / 2.
    """
    out = (
        args.lam * stats.s_of_alpha(args.alpha)
        - args.lam0 * stats.s_of_alpha(args.alpha0)
        - 0.5 * (args.lam**2 * stats.q_of_alpha(args.alpha) - args.lam0**2 * stats.q_of_alpha(args.alpha0))
    )
    return _as_output(out)
