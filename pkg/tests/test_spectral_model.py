import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import zeta

from difflim.spectral_model import (
    TargetFunctional,
    c_grad_psi,
    drift_field,
    grad_psi,
    make_spectrum,
    psi_value,
    s_of,
    sobolev_norm_sq,
)


def test_eigenvalues_are_inverse_powers():
    spec = make_spectrum(1.5, 0.5, 5)
    np.testing.assert_allclose(spec.lam, [1.0, 2**-1.5, 3**-1.5, 4**-1.5, 5**-1.5], rtol=0, atol=0)
    assert spec.lam[0] == 1.0


@pytest.mark.parametrize(
    "kappa, s, n, msg",
    [
        (0.5, 0.0, 4, "kappa must exceed 1/2"),
        (1.0, -0.1, 4, "non-negative"),
        (1.0, 0.5, 4, "below kappa - 1/2"),
        (1.0, 0.0, 0, "positive integer"),
        (1.0, 0.0, 2.5, "positive integer"),
    ],
)
def test_invalid_spectra_are_rejected(kappa, s, n, msg):
    with pytest.raises(ValueError, match=msg):
        make_spectrum(kappa, s, n)


def test_s_of_profile_is_c_squared():
    for n in (1, 7, 100):
        spec = make_spectrum(1.0, 0.25, n)
        assert s_of(0.5 * spec.lam, spec) == pytest.approx(0.25, rel=1e-15)


def test_s_of_dimension_mismatch():
    spec = make_spectrum(1.0, 0.0, 3)
    with pytest.raises(ValueError, match="dimension mismatch"):
        s_of(np.ones(4), spec)


def test_sobolev_norm_by_hand():
    spec = make_spectrum(1.5, 0.5, 3)
    x = np.array([1.0, 2.0, 3.0])
    # weights j^{2s} = j
    assert sobolev_norm_sq(x, spec) == pytest.approx(1 + 2 * 4 + 3 * 9)
    assert sobolev_norm_sq(x, spec, s=0.0) == pytest.approx(14.0)


def test_trace_and_tail_add_up_to_zeta():
    spec = make_spectrum(1.0, 0.25, 50)
    total = zeta(2 * 1.0 - 2 * 0.25)
    assert spec.trace_s + spec.tail_mass() == pytest.approx(total, rel=1e-12)


def test_psi_functionals():
    spec = make_spectrum(1.5, 0.5, 4)
    x = np.array([1.0, -1.0, 2.0, 0.5])
    zero = TargetFunctional.zero()
    half = TargetFunctional.half_sobolev()
    assert psi_value(zero, x, spec) == 0.0
    assert psi_value(half, x, spec) == pytest.approx(0.5 * sobolev_norm_sq(x, spec))
    np.testing.assert_allclose(grad_psi(half, x, spec), spec.index * x)
    np.testing.assert_allclose(c_grad_psi(half, x, spec), spec.lam_sq * spec.index * x)
    np.testing.assert_allclose(drift_field(zero, x, spec), -x)


def test_psi_parse_and_diagonal_validation():
    assert TargetFunctional.parse("half-sobolev").kind == "half_sobolev"
    assert TargetFunctional.parse(" zero ").is_zero
    with pytest.raises(ValueError):
        TargetFunctional.parse("cubic")
    with pytest.raises(ValueError):
        TargetFunctional.diagonal([1.0, -1.0])
    spec = make_spectrum(1.0, 0.0, 3)
    with pytest.raises(ValueError, match="dimension mismatch"):
        TargetFunctional.diagonal([1.0, 2.0]).mode_weights(spec)


@settings(max_examples=50, deadline=None)
@given(
    kappa=st.floats(0.6, 3.0),
    frac=st.floats(0.0, 0.95),
    n=st.integers(1, 60),
    seed=st.integers(0, 2**32 - 1),
)
def test_drift_field_lipschitz_in_sobolev_norm(kappa, frac, n, seed):
    s = frac * (kappa - 0.5)
    spec = make_spectrum(kappa, s, n)
    psi = TargetFunctional.half_sobolev()
    gen = np.random.default_rng(seed)
    x, y = gen.normal(size=(2, n))
    lhs = math.sqrt(sobolev_norm_sq(drift_field(psi, x, spec) - drift_field(psi, y, spec), spec))
    rhs = psi.lipschitz_constant(spec) * math.sqrt(sobolev_norm_sq(x - y, spec))
    assert lhs <= rhs * (1 + 1e-12)


@settings(max_examples=50, deadline=None)
@given(c=st.floats(-3, 3), n=st.integers(1, 200))
def test_s_of_scaling(c, n):
    spec = make_spectrum(1.0, 0.0, n)
    assert s_of(c * spec.lam, spec) == pytest.approx(c * c, rel=1e-13, abs=1e-300)
