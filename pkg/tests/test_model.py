import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oufinite.errors import (
    MalformedInput,
    NonFiniteField,
    NonPositiveHorizon,
    NonPositiveSigma,
    ValidationError,
)
from oufinite.model import (
    EstimateReport,
    OUParams,
    Path,
    SufficientStats,
    q_of_alpha,
    rescale_to_unit_sigma,
    restore_sigma,
    validate,
)

finite = st.floats(-50, 50, allow_nan=False)
positive = st.floats(0.01, 50)


def test_validate_accepts_paper_setup():
    p = OUParams(1.0, 0.0, 1.0, 1.0, 50.0)
    assert validate(p) is p


@pytest.mark.parametrize(
    "kwargs, exc, field",
    [
        (dict(sigma=0.0), NonPositiveSigma, "sigma"),
        (dict(sigma=-1.0), NonPositiveSigma, "sigma"),
        (dict(horizon=0.0), NonPositiveHorizon, "horizon"),
        (dict(lam=math.nan), NonFiniteField, "lambda"),
        (dict(alpha=math.inf), NonFiniteField, "alpha"),
        (dict(y0=-math.inf), NonFiniteField, "y0"),
    ],
)
def test_validate_rejects(kwargs, exc, field):
    base = dict(lam=1.0, alpha=0.0, sigma=1.0, y0=1.0, horizon=10.0)
    base.update(kwargs)
    with pytest.raises(exc) as info:
        validate(OUParams(**base))
    assert info.value.field == field
    assert isinstance(info.value, ValueError)


@pytest.mark.parametrize("lam", [-1.0, 0.0, 1e-9, 3.0])
def test_any_real_lambda_is_valid(lam):
    validate(OUParams(lam, 0.0, 1.0, 0.0, 1.0))


@given(finite, finite, positive, finite, positive)
def test_dict_and_json_round_trip(lam, alpha, sigma, y0, T):
    p = OUParams(lam, alpha, sigma, y0, T)
    assert OUParams.from_dict(p.to_dict()) == p
    assert OUParams.from_json(p.to_json()) == p


@pytest.mark.parametrize(
    "payload",
    [
        {"lambda": 1, "alpha": 0, "sigma": 1, "y0": 0, "horizon": 1, "extra": 2},
        {"lambda": 1, "alpha": 0, "sigma": 1, "y0": 0},
        {"lambda": "1", "alpha": 0, "sigma": 1, "y0": 0, "horizon": 1},
        {"lambda": True, "alpha": 0, "sigma": 1, "y0": 0, "horizon": 1},
    ],
)
def test_from_dict_rejects_malformed(payload):
    with pytest.raises(MalformedInput):
        OUParams.from_dict(payload)


def test_from_json_requires_object():
    with pytest.raises(MalformedInput):
        OUParams.from_json("[1, 2]")


@given(finite, finite, positive, finite, positive)
def test_rescale_round_trip(lam, alpha, sigma, y0, T):
    p = OUParams(lam, alpha, sigma, y0, T)
    unit, factor = rescale_to_unit_sigma(p)
    assert unit.sigma == 1.0 and factor == sigma
    back = restore_sigma(unit, factor)
    assert back.lam == p.lam
    assert back.alpha == pytest.approx(p.alpha, rel=1e-12, abs=1e-12)
    assert back.y0 == pytest.approx(p.y0, rel=1e-12, abs=1e-12)


def test_path_grid_checks():
    t = np.linspace(0, 1, 11)
    path = Path(t, np.zeros(11))
    assert path.horizon == 1.0 and path.n_steps == 10
    with pytest.raises(ValidationError):
        Path(t + 0.1, np.zeros(11))
    with pytest.raises(ValidationError):
        Path(np.array([0.0, 0.1, 1.0]), np.zeros(3))
    with pytest.raises(ValidationError):
        Path(t, np.zeros(10))
    with pytest.raises(NonFiniteField):
        Path(t, np.full(11, np.nan))


def test_path_is_read_only():
    path = Path(np.linspace(0, 1, 3), np.zeros(3))
    with pytest.raises(ValueError):
        path.values[0] = 1.0


def test_stats_cauchy_schwarz():
    with pytest.raises(ValidationError):
        SufficientStats(0.0, 2.0, 1.0, 0.0, 1.0)


@given(finite, st.floats(0, 10), finite, positive, st.floats(-5, 5))
def test_q_of_alpha_non_negative_and_matches_expansion(i_mean, spread, y0, T, alpha):
    i_T = i_mean * T
    j_T = i_T * i_T / T + spread * T
    s = SufficientStats(0.0, i_T, j_T, y0, T)
    q = q_of_alpha(s, alpha)
    assert q >= 0
    naive = j_T - 2 * alpha * i_T + alpha * alpha * T
    assert q == pytest.approx(naive, rel=1e-9, abs=1e-9 * (abs(j_T) + alpha * alpha * T + 1))


def test_s_of_alpha_ito_form():
    s = SufficientStats(y_T=2.0, i_T=1.0, j_T=3.0, y0=1.0, horizon=4.0)
    # (T - (Y_T - a)^2 + (y - a)^2) / 2 at a = 0.5
    assert s.s_of_alpha(0.5) == pytest.approx(0.5 * (4 - 2.25 + 0.25))


def test_martingales_at_truth():
    s = SufficientStats(y_T=2.0, i_T=1.0, j_T=3.0, y0=1.0, horizon=4.0)
    assert s.martingale_n(0.5, 2.0) == pytest.approx(2 - 1 - 2 * (0.5 * 4 - 1))
    assert s.martingale_m(0.5, 2.0) == pytest.approx(s.s_of_alpha(0.5) - 2 * s.q_of_alpha(0.5))


def test_scaled_stats():
    s = SufficientStats(2.0, 1.0, 3.0, 1.0, 4.0).scaled(2.0)
    assert (s.y_T, s.i_T, s.j_T, s.y0) == (1.0, 0.5, 0.75, 0.5)


def test_estimate_report():
    r = EstimateReport("lambda_bar", 1.2, bias=0.1, extra={"path_id": 3})
    d = json.loads(r.to_json())
    assert d["estimator_kind"] == "lambda_bar" and d["path_id"] == 3
    with pytest.raises(ValidationError):
        EstimateReport("nope", 1.0)
    with pytest.raises(NonFiniteField):
        EstimateReport("alpha_bar", math.nan)
