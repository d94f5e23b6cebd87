"""Domain types for the Ornstein-Uhlenbeck model dY = lambda (alpha - Y) dt + sigma dW.

Everything here is an immutable value object.  Transform and moment code
works on the sigma = 1 model only; :func:`rescale_to_unit_sigma` maps a general
parameter set onto it (the process Y / sigma solves the unit-sigma SDE).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Literal

import numpy as np

from .errors import (
    MalformedInput,
    NonFiniteField,
    NonPositiveHorizon,
    NonPositiveSigma,
    ValidationError,
)

PARAM_KEYS = ("lambda", "alpha", "sigma", "y0", "horizon")

EstimatorKind = Literal[
    "lambda_hat_given_alpha", "alpha_hat_given_lambda", "alpha_bar", "lambda_bar"
]
ESTIMATOR_KINDS: tuple[str, ...] = (
    "lambda_hat_given_alpha",
    "alpha_hat_given_lambda",
    "alpha_bar",
    "lambda_bar",
)


@dataclass(frozen=True)
class OUParams:
    """Model parameters and observation horizon.

    ``lam`` may be zero or negative; each downstream operation states the
    range of ``lam`` it supports.
    """

    lam: float
    alpha: float
    sigma: float
    y0: float
    horizon: float

    def to_dict(self) -> dict[str, float]:
        return {
            "lambda": self.lam,
            "alpha": self.alpha,
            "sigma": self.sigma,
            "y0": self.y0,
            "horizon": self.horizon,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "OUParams":
        unknown = set(data) - set(PARAM_KEYS)
        if unknown:
            raise MalformedInput(f"unknown parameter keys {sorted(unknown)}")
        missing = [k for k in PARAM_KEYS if k not in data]
        if missing:
            raise MalformedInput(f"missing parameter keys {missing}")
        values = {}
        for key in PARAM_KEYS:
            v = data[key]
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise MalformedInput(f"{key} must be a number", column=key)
            values[key] = float(v)
        return validate(
            cls(
                lam=values["lambda"],
                alpha=values["alpha"],
                sigma=values["sigma"],
                y0=values["y0"],
                horizon=values["horizon"],
            )
        )

    @classmethod
    def from_json(cls, text: str) -> "OUParams":
        data = json.loads(text)
        if not isinstance(data, dict):
            raise MalformedInput("parameters must be a JSON object")
        return cls.from_dict(data)


def validate(params: OUParams) -> OUParams:
    """Return ``params`` unchanged if every invariant holds, else raise."""
    for name, value in (
        ("lambda", params.lam),
        ("alpha", params.alpha),
        ("sigma", params.sigma),
        ("y0", params.y0),
        ("horizon", params.horizon),
    ):
        if not math.isfinite(value):
            raise NonFiniteField(name, f"must be finite, got {value!r}")
    if params.sigma <= 0:
        raise NonPositiveSigma("sigma", f"must be > 0, got {params.sigma!r}")
    if params.horizon <= 0:
        raise NonPositiveHorizon("horizon", f"must be > 0, got {params.horizon!r}")
    return params


def rescale_to_unit_sigma(params: OUParams) -> tuple[OUParams, float]:
    """Map ``params`` to the equivalent sigma = 1 model.

    Returns the rescaled parameters ``(lam, alpha/sigma, 1, y0/sigma, T)`` and
    the factor ``sigma``.  Estimates of ``lam`` carry over unchanged; estimates
    of ``alpha`` and ``y0`` map back by multiplying with the factor.
    """
    validate(params)
    s = params.sigma
    if s == 1.0:
        return params, 1.0
    return (
        OUParams(params.lam, params.alpha / s, 1.0, params.y0 / s, params.horizon),
        s,
    )


def restore_sigma(unit: OUParams, factor: float) -> OUParams:
    """Inverse of :func:`rescale_to_unit_sigma`."""
    if factor == 1.0:
        return unit
    return OUParams(unit.lam, unit.alpha * factor, factor, unit.y0 * factor, unit.horizon)


@dataclass(frozen=True)
class Path:
    """A trajectory sampled on the uniform grid 0 = t_0 < ... < t_n = T."""

    times: np.ndarray
    values: np.ndarray
    params_used: OUParams | None = None

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        y = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or y.ndim != 1 or t.size != y.size:
            raise ValidationError("values", "times and values must be 1-D of equal length")
        if t.size < 2:
            raise ValidationError("times", "a path needs at least two grid points")
        if t[0] != 0.0:
            raise ValidationError("times", "grid must start at 0")
        n = t.size - 1
        horizon = t[-1]
        if not horizon > 0:
            raise NonPositiveHorizon("times", "grid must be strictly increasing")
        # grid points must sit on k*T/n up to relative 1e-12 of T
        expected = horizon * np.arange(n + 1) / n
        if np.max(np.abs(t - expected)) > 1e-12 * horizon:
            raise ValidationError("times", "grid must be uniform")
        if not np.all(np.isfinite(y)):
            raise NonFiniteField("values", "path contains non-finite values")
        t.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", y)

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def n_steps(self) -> int:
        return self.times.size - 1


@dataclass(frozen=True)
class SufficientStats:
    """Path functionals (Y_T, int Y ds, int Y^2 ds) plus y0 and T.

    Every estimator in the package is a closed-form function of these five
    numbers.  S_T(alpha) is reconstructed with the Ito-reduced closed form
    rather than from a discretised stochastic integral.
    """

    y_T: float
    i_T: float
    j_T: float
    y0: float
    horizon: float

    def __post_init__(self):
        for name in ("y_T", "i_T", "j_T", "y0", "horizon"):
            if not math.isfinite(getattr(self, name)):
                raise NonFiniteField(name, "must be finite")
        if self.horizon <= 0:
            raise NonPositiveHorizon("horizon", "must be > 0")
        T = self.horizon
        slack = 1e-12 * max(abs(self.j_T) * T, self.i_T * self.i_T, 1e-300)
        if self.j_T * T < self.i_T * self.i_T - slack:
            raise ValidationError("j_T", "violates Cauchy-Schwarz j_T * T >= i_T**2")

    @property
    def alpha_bar(self) -> float:
        return self.i_T / self.horizon

    def q_of_alpha(self, alpha: float) -> float:
        return q_of_alpha(self, alpha)

    def s_of_alpha(self, alpha: float) -> float:
        """S_T(alpha) = int (alpha - Y) dY = (T - (Y_T - alpha)^2 + (y0 - alpha)^2) / 2."""
        return 0.5 * (
            self.horizon - (self.y_T - alpha) ** 2 + (self.y0 - alpha) ** 2
        )

    def b_of_lambda(self, lam: float) -> float:
        """B_T(lambda) = Y_T - y0 + lambda * int Y ds."""
        return self.y_T - self.y0 + lam * self.i_T

    def martingale_m(self, alpha: float, lam: float) -> float:
        """M_T(alpha) = S_T(alpha) - lambda Q_T(alpha) under the true ``lam``."""
        return self.s_of_alpha(alpha) - lam * self.q_of_alpha(alpha)

    def martingale_n(self, alpha: float, lam: float) -> float:
        """N_T = Y_T - y0 - lambda (alpha T - I_T), i.e. W_T under the true parameters."""
        return self.y_T - self.y0 - lam * (alpha * self.horizon - self.i_T)

    def scaled(self, factor: float) -> "SufficientStats":
        """Stats of the path Y / factor."""
        return SufficientStats(
            self.y_T / factor,
            self.i_T / factor,
            self.j_T / factor**2,
            self.y0 / factor,
            self.horizon,
        )


def q_of_alpha(stats: SufficientStats, alpha: float) -> float:
    """Q_T(alpha) = j_T - 2 alpha i_T + alpha^2 T, evaluated in the non-negative form.

    Written as (j_T - i_T^2/T) + T (alpha - i_T/T)^2 so that round-off cannot
    push the result below zero.
    """
    T = stats.horizon
    abar = stats.i_T / T
    centred = max(stats.j_T - stats.i_T * abar, 0.0)
    return centred + T * (alpha - abar) ** 2


@dataclass(frozen=True)
class EstimateReport:
    estimator_kind: str
    value: float
    bias: float | None = None
    mse: float | None = None
    cr_bound: float | None = None
    asymptotic_ref: float | None = None
    extra: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.estimator_kind not in ESTIMATOR_KINDS:
            raise ValidationError("estimator_kind", f"unknown kind {self.estimator_kind!r}")
        if not math.isfinite(self.value):
            raise NonFiniteField("value", "estimate must be finite")

    def to_dict(self) -> dict[str, Any]:
        out = {
            "estimator_kind": self.estimator_kind,
            "value": self.value,
            "bias": self.bias,
            "mse": self.mse,
            "cr_bound": self.cr_bound,
            "asymptotic_ref": self.asymptotic_ref,
        }
        out.update(self.extra)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict())
