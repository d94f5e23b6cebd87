import io

import numpy as np
import pytest

from oufinite import invert as I
from oufinite.errors import NotApplicable, NotUnitSigma
from oufinite.estimate import mle_lambda_given_alpha
from oufinite.model import OUParams
from oufinite.simulate import SimConfig, simulate_stats
from oufinite.transform import mgf_zeta

P = OUParams(1.0, 0.0, 1.0, 1.0, 10.0)
GS = I.InversionConfig(method="gaver_stehfest")

# Fourier inversion, frozen; Monte Carlo with 2000 paths gave 0.0371, 0.4219, 0.7814, 0.9320
FROZEN_CDF = [
    (0.5, 0.03595808630556824),
    (1.0, 0.4204083274751431),
    (1.5, 0.7768240981481215),
    (2.0, 0.9295894587571119),
]


@pytest.mark.parametrize("x, ref", FROZEN_CDF)
def test_cdf_frozen(x, ref):
    assert I.cdf_lambda_hat(P, x).cdf == pytest.approx(ref, abs=1e-9)


@pytest.mark.parametrize("x, ref", FROZEN_CDF)
def test_gaver_stehfest_agrees_with_fourier(x, ref):
    assert I.cdf_lambda_hat(P, x, GS).cdf == pytest.approx(ref, abs=5e-3)


@pytest.mark.parametrize("x", [0.3, 1.0, 2.5])
def test_step_refinement_is_stable(x):
    base = I.cdf_lambda_hat(P, x)
    fine = I.cdf_lambda_hat(P, x, I.InversionConfig(contour_step=base.diagnostics["step"] / 2, min_nodes=4000))
    assert fine.cdf == pytest.approx(base.cdf, abs=1e-8)


def test_cdf_against_monte_carlo():
    stats = simulate_stats(P, SimConfig(n_steps=1000, seed=17, n_paths=10000))
    lam_hat = mle_lambda_given_alpha(stats, 0.0)
    for x, ref in FROZEN_CDF:
        emp = np.mean(lam_hat < x)
        assert abs(emp - ref) < 4 * np.sqrt(ref * (1 - ref) / lam_hat.size) + 2e-3


def test_origin_uses_gaussian_law_of_terminal_value():
    stats = simulate_stats(P, SimConfig(n_steps=10, seed=3, n_paths=200000))
    emp = np.mean(stats.s_of_alpha(0.0) < 0)
    r = I.cdf_lambda_hat(P, 0.0)
    assert r.diagnostics == {"closed_form": True}
    assert abs(r.cdf - emp) < 4 * np.sqrt(r.cdf / 200000) + 1e-6
    assert r.cdf + I.survival_zeta(P, 0.0) == pytest.approx(1.0)


def test_upper_limit():
    x = P.lam + 50 / np.sqrt(P.horizon)
    assert I.cdf_lambda_hat(P, x).cdf == pytest.approx(1.0, abs=1e-3)


def test_monotone_on_grid():
    xs = np.linspace(-0.5, 3.0, 50)
    vals = [r.cdf for r in I.cdf_grid(P, xs)]
    assert np.all(np.diff(vals) >= -1e-9)


@pytest.mark.parametrize("x", [0.2, 1.0, 1.7])
def test_complement_sums_to_one(x):
    r = I.cdf_lambda_hat(P, x)
    assert r.raw + I.survival_zeta(P, x) == pytest.approx(1.0, abs=1e-6)


def test_characteristic_function_conjugate_symmetry():
    t = np.linspace(0, 5, 201)
    pos = I.characteristic_function(P, 1.0, t)
    neg = I.characteristic_function(P, 1.0, -t)
    assert np.max(np.abs(pos - np.conj(neg))) < 1e-10


def test_zeta_moments_match_finite_difference():
    mean, var = I.zeta_moments(P, 1.5)
    h = 1e-4
    f = lambda s: float(np.real(mgf_zeta(P, 1.5, s)))
    assert mean == pytest.approx((f(h) - f(-h)) / (2 * h), rel=1e-6, abs=1e-8)
    second = (f(h) - 2 * f(0.0) + f(-h)) / h**2
    assert var == pytest.approx(second - mean**2, rel=1e-4)


def test_gaver_stehfest_needs_non_negative_x():
    with pytest.raises(NotApplicable):
        I.cdf_lambda_hat(P, -0.5, GS)
    flagged = I.cdf_grid(P, [-0.5, 1.0], GS)
    assert flagged[0].err_flag == "NotApplicable" and np.isnan(flagged[0].cdf)
    assert flagged[1].err_flag == ""


def test_stehfest_weights_sum_to_zero():
    for n in (4, 8, 14, 18):
        assert abs(I.stehfest_weights(n).sum()) < 1e-6 * np.abs(I.stehfest_weights(n)).max()
    with pytest.raises(ValueError):
        I.stehfest_weights(5)


@pytest.mark.parametrize(
    "kwargs",
    [dict(method="laplace"), dict(contour_step=0.0), dict(tail_cut=-1.0), dict(gs_order=3), dict(gs_order=20)],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        I.InversionConfig(**kwargs)


def test_requires_unit_sigma():
    with pytest.raises(NotUnitSigma):
        I.cdf_lambda_hat(OUParams(1.0, 0.0, 2.0, 1.0, 10.0), 1.0)


def test_csv_output():
    buf = io.StringIO()
    I.write_cdf_csv(I.cdf_grid(P, [1.0]), buf)
    header, row = buf.getvalue().splitlines()
    assert header == "x,cdf,err_flag,method"
    assert row.startswith("1.0,0.42") and row.endswith(",fourier")
