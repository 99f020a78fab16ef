import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from difflim import scalar_laws as sl

# reference values at 40 significant digits, computed with mpmath from the
# closed forms and cross-checked against direct quadrature of E[1 ^ e^Z]
MP_VALUES = [
    # ell, x, D, Gamma, A
    (1.0, 0.5, 0.60653065971263342, 0.92384116757554753, 0.3173105078629141),
    (1.0, 0.25, 0.71823328572568287, 0.875532492775968, 0.51641584991312656),
    (0.5, 2.0, 0.14549764028427391, 0.34614447744281204, -0.23584608369428358),
    (2.0, 0.1, 0.21855189585455943, 0.21858287272028361, 0.17487249354937172),
    (1.0, 1.0, 0.47950012218695346, 0.95900024437390692, 0.0),
    (2.0, 4.0, 0.48377128237691177, 2.4017717711247256, -1.4683984878905686),
    (1.0, 0.0, 0.73575888234288464, 0.73575888234288464, 0.73575888234288464),
]


@pytest.mark.parametrize("ell, x, d, g, a", MP_VALUES)
def test_closed_forms_against_high_precision(ell, x, d, g, a):
    assert sl.d_ell(ell, x) == pytest.approx(d, rel=1e-14, abs=1e-16)
    assert sl.gamma_ell(ell, x) == pytest.approx(g, rel=1e-14, abs=1e-16)
    assert sl.a_ell(ell, x) == pytest.approx(a, rel=1e-13, abs=1e-15)


def _mp_d(ell, x):
    ell, x = mp.mpf(ell), mp.mpf(x)
    return 2 * ell**2 * mp.e ** (ell**2 * (x - 1)) * mp.ncdf(ell * (1 - 2 * x) / mp.sqrt(2 * x))


@settings(max_examples=60, deadline=None)
@given(ell=st.floats(0.1, 4.0), x=st.floats(1e-6, 50.0))
def test_d_ell_matches_mpmath_everywhere(ell, x):
    with mp.workdps(30):
        ref = float(_mp_d(ell, x))
    assert sl.d_ell(ell, x) == pytest.approx(ref, rel=1e-11, abs=1e-300)


def test_h_ell_is_d_ell_at_one_bitwise():
    for ell in (0.1, 0.5, 1.0, 2.0, 3.7):
        assert sl.h_ell(ell) == sl.d_ell(ell, 1.0)
        assert sl.gamma_ell(ell, 1.0) == pytest.approx(2 * sl.h_ell(ell), rel=1e-15)
        assert sl.a_ell(ell, 1.0) == 0.0


def test_known_h_values():
    assert sl.h_ell(1.0) == pytest.approx(0.47950012218695346, rel=1e-15)
    assert sl.h_ell(0.5) == pytest.approx(0.18091840245794077, rel=1e-15)
    assert sl.h_ell(2.0) == pytest.approx(0.62919682820114052, rel=1e-15)


def test_value_at_zero_is_continuous():
    for ell in (0.5, 1.0, 2.0):
        at0 = 2 * ell * ell * math.exp(-ell * ell)
        for f in (sl.d_ell, sl.gamma_ell, sl.a_ell):
            assert f(ell, 0.0) == pytest.approx(at0, rel=1e-15)
            assert f(ell, 1e-6) == pytest.approx(at0, rel=1e-4)


def test_array_and_scalar_inputs():
    xs = np.array([0.0, 0.5, 1.0, 2.0])
    out = sl.a_ell(1.0, xs)
    assert isinstance(out, np.ndarray) and out.shape == (4,)
    assert isinstance(sl.a_ell(1.0, 0.5), float)
    np.testing.assert_allclose(out, [sl.a_ell(1.0, v) for v in xs], rtol=0, atol=0)


def test_domain_errors():
    with pytest.raises(ValueError):
        sl.d_ell(1.0, -0.1)
    with pytest.raises(ValueError):
        sl.d_ell(0.0, 1.0)
    with pytest.raises(ValueError):
        sl.d_ell_prime(1.0, 0.0)
    with pytest.raises(ValueError):
        sl.expect_min1_exp(0.0, 0.0)


def test_no_overflow_far_out():
    for x in (1e3, 1e6):
        for f in (sl.d_ell, sl.gamma_ell, sl.a_ell):
            assert np.isfinite(f(3.0, x))
    assert sl.d_ell(3.0, 1e6) >= 0.0


@settings(max_examples=200, deadline=None)
@given(ell=st.floats(0.05, 5.0), x=st.floats(0.0, 200.0))
def test_structural_identities(ell, x):
    d = sl.d_ell(ell, x)
    g = sl.gamma_ell(ell, x)
    a = sl.a_ell(ell, x)
    assert d >= 0 and g >= d
    assert g <= 2 * ell * ell * (1 + 1e-15)
    assert a == pytest.approx(-2 * x * d + g, abs=1e-12 * max(1.0, abs(a)))
    if x < 1:
        assert a > 0
    elif x > 1:
        assert a < 0


@settings(max_examples=100, deadline=None)
@given(ell=st.floats(0.2, 3.0), x=st.floats(0.02, 20.0))
def test_derivatives_match_central_differences(ell, x):
    h = 1e-5 * max(1.0, x)
    for f, fp in ((sl.d_ell, sl.d_ell_prime), (sl.gamma_ell, sl.gamma_ell_prime), (sl.a_ell, sl.a_ell_prime)):
        fd = (f(ell, x + h) - f(ell, x - h)) / (2 * h)
        assert fp(ell, x) == pytest.approx(fd, rel=1e-6, abs=1e-7)


def test_corrected_a_prime_sign_at_one():
    # finite differences decide between the two candidate signs of the 2x l^2 term
    fd = (sl.a_ell(1.0, 1.0 + 1e-6) - sl.a_ell(1.0, 1.0 - 1e-6)) / 2e-6
    assert sl.a_ell_prime(1.0, 1.0) == pytest.approx(fd, rel=1e-7)
    e = math.exp(-0.25)
    printed = (1 - 2 + 2) * sl.d_ell(1.0, 1.0) + 2 * e / math.sqrt(math.pi)
    assert abs(printed - fd) > 1.0


def test_a_ell_ext_joins_smoothly():
    for ell in (0.5, 1.0, 1.4, 2.0, 3.0):
        a0 = 2 * ell * ell * math.exp(-ell * ell)
        eps = 1e-7
        assert sl.a_ell_ext(ell, 0.0) == pytest.approx(a0, rel=1e-15)
        assert sl.a_ell_ext(ell, -eps) == pytest.approx(a0, rel=1e-5)
        assert sl.a_ell_ext(ell, -0.5) == pytest.approx(1.0, rel=1e-15)
        assert sl.a_ell_ext(ell, -5.0) == 1.0
        # one-sided slopes agree at 0 (right slope of A is (l^2 - 2) A(0))
        left = (sl.a_ell_ext(ell, 0.0) - sl.a_ell_ext(ell, -1e-7)) / 1e-7
        assert left == pytest.approx((ell * ell - 2) * a0, rel=1e-3, abs=1e-6)
        right = (sl.a_ell(ell, 2e-2) - sl.a_ell(ell, 1e-2)) / 1e-2
        if ell <= 1.0:
            assert right == pytest.approx((ell * ell - 2) * a0, rel=0.2)
        # zero slope at -1/2
        assert (sl.a_ell_ext(ell, -0.5 + 1e-6) - 1.0) / 1e-6 == pytest.approx(0.0, abs=1e-4)


@settings(max_examples=100, deadline=None)
@given(ell=st.floats(0.1, 1.41), x=st.floats(-2.0, 0.0), dx=st.floats(0.0, 1.0))
def test_a_ell_ext_positive_and_monotone_for_small_ell(ell, x, dx):
    lo = sl.a_ell_ext(ell, x)
    hi = sl.a_ell_ext(ell, min(x + dx, 0.0))
    assert lo > 0
    assert hi <= lo * (1 + 1e-12)


@settings(max_examples=100, deadline=None)
@given(ell=st.floats(1.5, 4.0), x=st.floats(-2.0, 0.0))
def test_a_ell_ext_positive_for_large_ell(ell, x):
    assert sl.a_ell_ext(ell, x) > 0


def _quad_expectations(mu, sigma):
    # direct quadrature over the normal density as an independent route
    with mp.workdps(30):
        mu, sigma = mp.mpf(mu), mp.mpf(sigma)
        dens = lambda z: mp.npdf(z, mu, sigma)  # noqa: E731
        neg = mp.quad(lambda z: dens(z) * mp.e**z, [-mp.inf, 0])
        pos = mp.quad(dens, [0, mp.inf])
        m2 = mp.quad(lambda z: -2 * z * dens(z) * mp.e**z, [-mp.inf, 0]) + mp.quad(lambda z: -2 * z * dens(z), [0, mp.inf])
        return float(neg), float(neg + pos), float(m2)


@pytest.mark.parametrize("mu, sigma", [(-1.0, math.sqrt(2.0)), (0.5, 0.3), (-4.0, 2.0), (2.0, 1.0), (-0.25, 0.05)])
def test_gaussian_expectations_against_quadrature(mu, sigma):
    neg, mn, m2 = _quad_expectations(mu, sigma)
    assert sl.expect_exp_indicator_neg(mu, sigma) == pytest.approx(neg, rel=1e-12)
    assert sl.expect_min1_exp(mu, sigma) == pytest.approx(mn, rel=1e-12)
    assert sl.expect_neg2x_min1_exp(mu, sigma) == pytest.approx(m2, rel=1e-11, abs=1e-14)


@pytest.mark.parametrize("a, b", [(1.0, 0.0), (0.5, -1.0), (-2.0, 0.3), (3.0, 2.0)])
def test_expect_x_min1_exp_against_quadrature(a, b):
    with mp.workdps(30):
        f = lambda z: z * mp.npdf(z) * min(mp.mpf(1), mp.e ** (a * z + b))  # noqa: E731
        ref = float(mp.quad(f, [-mp.inf, -mp.mpf(b) / a, mp.inf]))
    assert sl.expect_x_min1_exp(a, b) == pytest.approx(ref, rel=1e-12)


def test_expectation_trivial_cases():
    assert sl.expect_x_min1_exp(0.0, 1.3) == 0.0
    assert sl.expect_x_min1_exp(0.0, -1.3) == 0.0
    # mu = 0: E[1 ^ e^X] = e^{s^2/2} Phi(-s) + 1/2
    s = 0.7
    assert sl.expect_min1_exp(0.0, s) == pytest.approx(math.exp(s * s / 2) * 0.5 * math.erfc(s / math.sqrt(2)) + 0.5, rel=1e-15)
    # the symmetric pair (a, b) and (-a, b) give opposite values
    assert sl.expect_x_min1_exp(-1.5, 0.2) == pytest.approx(-sl.expect_x_min1_exp(1.5, 0.2), rel=1e-15)


def test_scalar_laws_are_gaussian_expectations():
    for ell in (0.5, 1.0, 2.0):
        for x in (0.1, 0.5, 1.0, 2.0):
            mu, sigma = sl.gaussian_params(ell, x)
            assert sl.expect_exp_indicator_neg(mu, sigma) == pytest.approx(sl.d_ell(ell, x) / (2 * ell * ell), rel=1e-13)
            assert sl.expect_min1_exp(mu, sigma) == pytest.approx(sl.gamma_ell(ell, x) / (2 * ell * ell), rel=1e-13)
            assert sl.expect_neg2x_min1_exp(mu, sigma) == pytest.approx(sl.a_ell(ell, x), rel=1e-12, abs=1e-14)


def test_f_a_derivative_and_tails():
    for a in (0.3, 1.0, 2.5):
        for x in (-3.0, 0.0, 0.7, 4.0):
            fd = (sl.f_a(x + 1e-6, a) - sl.f_a(x - 1e-6, a)) / 2e-6
            assert sl.f_a_prime(x, a) == pytest.approx(fd, rel=1e-6, abs=1e-9)
    assert np.isfinite(sl.f_a(800.0, 1.0)) and sl.f_a(800.0, 1.0) < 1e-100


def test_f_a_bound_fails_for_small_a():
    # counterexample to the a-uniform bound: the true constant grows like 1/a
    a = 0.05
    xs = np.linspace(-1, 1, 20001)
    worst = np.max(np.abs(sl.f_a_prime(xs, a)))
    assert worst > 5 * sl.f_a_lipschitz_scale(a)
