import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gaussian_oracle import psi_bar_reference, psi_reference
from oufinite import moments, transform as tr
from oufinite.errors import NonzeroInitialValue, NotUnitSigma, OutsideConvergenceRegion
from oufinite.jet import Jet
from oufinite.model import OUParams
from oufinite.transform import BivariateGaussianSpec, MgfArgs

# (lam, alpha, y0, T, z1, z2, v, mu) -> grid-Gaussian reference (800 steps, Richardson)
PSI_FROZEN = [
    ((1.0, 0.5, 1.0, 2.0, 0.3, -0.2, 0.4, 1.0), 0.3575606003552398),
    ((1.0, 1.0, 1.0, 2.0, 0.0, 0.0, 0.0, 0.3), 0.8106041821981722),
    ((-1.0, 0.5, 1.0, 2.0, 0.2, 0.1, 0.3, 0.5), 0.12896581204669003),
    ((0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0), 0.36152318489484253),
    ((0.1, -1.0, 1.0, 5.0, 0.1, 0.05, 0.2, 0.2), 0.07599579073981415),
]

params_st = st.builds(
    OUParams,
    lam=st.floats(-2, 3),
    alpha=st.floats(-2, 2),
    sigma=st.just(1.0),
    y0=st.floats(-2, 2),
    horizon=st.floats(0.1, 60),
)


@pytest.mark.parametrize("case, ref", PSI_FROZEN)
def test_psi_frozen_reference(case, ref):
    lam, a, y, T, z1, z2, v, mu = case
    assert float(tr.psi(OUParams(lam, a, 1.0, y, T), MgfArgs(z1, z2, v, mu))) == pytest.approx(ref, rel=1e-9)


def test_raw_kernel_frozen_reference():
    # mu on int Y^2 rather than on int (Y - alpha)^2
    val = tr.raw_joint_mgf(OUParams(1.0, 1.0, 1.0, 1.0, 2.0), MgfArgs(0.2, 0.3, 0.1, 0.5))
    assert float(val) == pytest.approx(0.5786601193557956, rel=1e-9)


@pytest.mark.parametrize(
    "lam, alpha, T, z1, z2, mu, ref",
    [
        (1.0, 0.5, 2.0, 0.2, 0.3, 0.4, 1.03747281964701),
        (2.0, -1.0, 3.0, -0.1, 0.2, 1.5, 0.38122027175419343),
    ],
)
def test_psi_bar_frozen_reference(lam, alpha, T, z1, z2, mu, ref):
    assert float(tr.psi_bar(OUParams(lam, alpha, 1.0, 0.0, T), z1, z2, mu)) == pytest.approx(ref, rel=1e-9)


def test_psi_live_reference_long_horizon():
    p = OUParams(0.5, 0.3, 1.0, -0.5, 12.0)
    ref = psi_reference(0.5, 0.3, -0.5, 12.0, 0.1, 0.02, 0.05, 0.02, n=1200)
    assert float(tr.psi(p, MgfArgs(0.1, 0.02, 0.05, 0.02))) == pytest.approx(np.real(ref), rel=1e-8)


@settings(max_examples=60, deadline=None)
@given(params_st)
def test_psi_at_origin_is_one(p):
    assert abs(float(tr.psi(p)) - 1.0) <= 1e-14


@settings(max_examples=40, deadline=None)
@given(params_st, st.floats(0, 5))
def test_laplace_Q_in_unit_interval(p, mu):
    val = float(tr.laplace_Q(p, mu))
    assert 0.0 <= val <= 1.0


@pytest.mark.parametrize("lam, alpha, y, T", [(1, 0, 1, 2), (0.1, -1, 1, 50), (-1, 0.5, 1, 5), (0, 0, 0, 10), (3, 1, 0, 1)])
def test_mu_derivative_at_zero_is_minus_expected_Q(lam, alpha, y, T):
    p = OUParams(lam, alpha, 1.0, y, T)
    eq = moments.expected_Q(p)
    h = 1e-3 / eq
    # central difference through the continuation below mu = 0
    f = lambda mu: complex(tr.psi(p, MgfArgs(mu=mu), continuation=True)).real
    d = (f(h) - f(-h)) / (2 * h)
    d_rich = (4 * d - (f(2 * h) - f(-2 * h)) / (4 * h)) / 3
    assert -d_rich == pytest.approx(eq, rel=1e-6)
    if lam != 0:
        jet = tr.psi(p, MgfArgs(mu=Jet.variable(0.0, 0, order=1)), continuation=True)
        assert -float(jet.deriv((1,))) == pytest.approx(eq, rel=1e-10)


def test_laplace_Q_completely_monotone():
    p = OUParams(1.0, 0.0, 1.0, 1.0, 10.0)
    mu = np.linspace(0, 2, 41)
    vals = tr.laplace_Q(p, mu)
    d1 = np.diff(vals)
    d2 = np.diff(vals, 2)
    assert np.all(d1 < 0) and np.all(d2 > 0)


@pytest.mark.parametrize("mu, y, T", [(1.0, 1.0, 1.0), (0.2, 0.0, 5.0), (3.0, -2.0, 0.5), (1e-6, 1.0, 2.0)])
def test_brownian_limit_matches_cameron_martin(mu, y, T):
    p = OUParams(0.0, 0.0, 1.0, y, T)
    assert float(tr.laplace_Q(p, mu)) == pytest.approx(tr.cameron_martin(mu, y, T), rel=1e-12)


def test_cameron_martin_known_value():
    # y = 0, mu = 1/2, T = 1: 1 / sqrt(cosh 1)
    assert tr.cameron_martin(0.5, 0.0, 1.0) == pytest.approx(1 / math.sqrt(math.cosh(1.0)), rel=1e-14)
    assert tr.cameron_martin(0.5, 0.0, 1.0) == pytest.approx(0.80502, abs=5e-6)


def test_cameron_martin_large_argument_does_not_overflow():
    mu, T = 1e4, 1.0
    z = math.sqrt(2 * mu) * T
    log_expected = -math.sqrt(mu / 2) - 0.5 * (z - math.log(2.0))
    assert math.log(tr.cameron_martin(mu, 1.0, T)) == pytest.approx(log_expected, rel=1e-12)


def test_cameron_martin_rejects_negative_mu():
    with pytest.raises(OutsideConvergenceRegion):
        tr.cameron_martin(-1.0, 0.0, 1.0)


def test_psi_conjugate_symmetry():
    p = OUParams(1.0, 0.5, 1.0, 1.0, 3.0)
    args = MgfArgs(0.1 + 0.2j, 0.05j, 0.1 - 0.1j, 0.2 + 0.3j)
    conj = MgfArgs(*(np.conj(a) for a in (args.z1, args.z2, args.v, args.mu)))
    a = complex(tr.psi(p, args, continuation=True))
    b = complex(tr.psi(p, conj, continuation=True))
    assert abs(a - np.conj(b)) < 1e-14


@pytest.mark.parametrize("args", [MgfArgs(v=-0.1), MgfArgs(mu=-0.01), MgfArgs(z1=0.1j)])
def test_continuation_must_be_requested(args):
    p = OUParams(1.0, 0.0, 1.0, 1.0, 2.0)
    with pytest.raises(OutsideConvergenceRegion):
        tr.psi(p, args)
    assert np.isfinite(complex(tr.psi(p, args, continuation=True)))


def test_real_blow_up_is_reported():
    # E exp(v Y_T^2) diverges once 2 v Var(Y_T) >= 1
    p = OUParams(1.0, 0.0, 1.0, 0.0, 5.0)
    with pytest.raises(OutsideConvergenceRegion):
        tr.psi(p, MgfArgs(v=-2.0), continuation=True)


def test_sigma_must_be_one():
    with pytest.raises(NotUnitSigma):
        tr.psi(OUParams(1.0, 0.0, 2.0, 0.0, 1.0))


def test_marginal_gaussian_mgf():
    lam, a, y, T, z = 0.7, 0.4, 1.2, 3.0, 0.35
    m = a + (y - a) * math.exp(-lam * T)
    d2 = -math.expm1(-2 * lam * T) / (2 * lam)
    val = float(tr.psi(OUParams(lam, a, 1.0, y, T), MgfArgs(z1=z)))
    assert val == pytest.approx(math.exp(z * m + 0.5 * z * z * d2), rel=1e-13)


def test_gaussian_quadratic_factorizes():
    spec = BivariateGaussianSpec(0.3, -0.2, 1.5, 0.7, 0.0)
    uni = lambda m, d, b, c: math.exp(b * m + c * m * m + 0.5 * (b + 2 * c * m) ** 2 * d / (1 - 2 * c * d)) / math.sqrt(1 - 2 * c * d)
    joint = float(tr.gaussian_quadratic_mgf(spec, 0.4, -0.1, -0.3, 0.2))
    assert joint == pytest.approx(uni(0.3, 1.5, 0.4, -0.3) * uni(-0.2, 0.7, -0.1, 0.2), rel=1e-12)


def test_gaussian_quadratic_region():
    spec = BivariateGaussianSpec(0.0, 0.0, 1.0, 1.0, 0.5)
    with pytest.raises(OutsideConvergenceRegion):
        tr.gaussian_quadratic_mgf(spec, 0.0, 0.0, 0.6, 0.0)


def test_psi_bar_requirements():
    with pytest.raises(NonzeroInitialValue):
        tr.psi_bar(OUParams(1.0, 0.0, 1.0, 1.0, 1.0), 0.0, 0.0, 0.1)
    with pytest.raises(OutsideConvergenceRegion):
        tr.psi_bar(OUParams(-1.0, 0.0, 1.0, 0.0, 1.0), 0.0, 0.0, 0.1)


def test_psi_bar_at_zero_mu_is_gaussian_mgf():
    p = OUParams(1.0, 0.5, 1.0, 0.0, 4.0)
    assert float(tr.psi_bar(p, 0.0, 0.0, 0.0)) == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("s", [0.05j, 0.2j, -0.1])
def test_mgf_zeta_against_grid_reference(s):
    p = OUParams(1.0, 0.0, 1.0, 1.0, 5.0)
    x = 1.0
    ref = np.exp(s * (2.5 + 0.5)) * psi_reference(1.0, 0.0, 1.0, 5.0, v=s / 2, mu=s * x)
    assert complex(tr.mgf_zeta(p, x, np.array([s]))[0]) == pytest.approx(complex(ref), rel=1e-8)


def test_mgf_zeta_origin_and_mean():
    lam, a, y, T, x = 1.0, 0.0, 1.0, 5.0, 1.0
    p = OUParams(lam, a, 1.0, y, T)
    assert float(tr.mgf_zeta(p, x, 0.0)) == 1.0
    h = 1e-5
    d = (float(tr.mgf_zeta(p, x, h)) - float(tr.mgf_zeta(p, x, -h))) / (2 * h)
    e2 = math.exp(-2 * lam * T)
    ey2 = (y - a) ** 2 * e2 + (1 - e2) / (2 * lam)
    mean = 0.5 * (T - ey2 + (y - a) ** 2) - x * moments.expected_Q(p)
    assert d == pytest.approx(mean, rel=1e-6, abs=1e-8)


def test_lambda_jet_matches_richardson():
    p = OUParams(0.8, 0.5, 1.0, 1.0, 6.0)
    mu = 0.05
    jet = tr.laplace_Q(p, mu, lam=Jet.variable(0.8, 0, order=2))
    f = lambda lam: float(tr.laplace_Q(OUParams(lam, 0.5, 1.0, 1.0, 6.0), mu))
    def cd(h):
        return (f(0.8 + h) - f(0.8 - h)) / (2 * h)
    rich = (4 * cd(1e-3) - cd(2e-3)) / 3
    assert float(jet.deriv((1,))) == pytest.approx(rich, rel=1e-7)


def test_tracked_sqrt_is_continuous():
    t = np.linspace(0, 40, 2001)
    z = 1.0 + 2j * t - t * t * 0.2
    r = tr.tracked_sqrt(z)
    assert np.max(np.abs(np.diff(r))) < 0.2
    assert np.allclose(r * r, z)


@pytest.mark.parametrize("u", [0.0, 1e-12, 1e-3, 0.5, 5.0, -0.5, -5.0])
def test_decay_ratio_stable(u):
    expected = 1.0 if u == 0 else -math.expm1(-2 * u) / (2 * u)
    assert float(tr.decay_ratio(u)) == pytest.approx(expected, rel=1e-12)
