import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import kv

from fracfilt.specfun import FracOrder, bessel_k, bessel_k_pair, constants, gamma

Z = np.logspace(-6, 2, 300)


@pytest.mark.parametrize("nu", [0.01, 0.05, 0.25, 0.5, 0.7, 0.95, 0.999])
def test_bessel_matches_scipy_oracle(nu):
    ours = bessel_k(nu, Z)
    ref = kv(nu, Z)
    assert np.max(np.abs(ours - ref) / ref) < 1e-12


def test_half_order_closed_form():
    z = np.logspace(-3, 1.5, 100)
    exact = np.sqrt(np.pi / (2 * z)) * np.exp(-z)
    assert np.max(np.abs(bessel_k(0.5, z) / exact - 1)) < 1e-13


def test_pair_returns_consecutive_orders():
    k0, k1 = bessel_k_pair(0.3, Z)
    assert np.allclose(k0, kv(0.3, Z), rtol=1e-12, atol=0)
    assert np.allclose(k1, kv(1.3, Z), rtol=1e-12, atol=0)


@pytest.mark.parametrize("nu", [0.1, 0.25, 0.4])
def test_three_term_recurrence(nu):
    k_nu, k_up = bessel_k_pair(nu, Z)
    k_down = bessel_k(1 - nu, Z)  # K is even in its order
    assert np.max(np.abs(k_up - k_down - 2 * nu / Z * k_nu) / k_nu) < 1e-9


@pytest.mark.parametrize("nu", [0.2, 0.5, 0.8])
def test_derivative_identity(nu):
    # K_nu' = -K_{nu-1} - (nu/z) K_nu, with K_{nu-1} = K_{1-nu}
    z = np.linspace(0.2, 8.0, 40)
    hstep = 1e-5
    fd = (bessel_k(nu, z + hstep) - bessel_k(nu, z - hstep)) / (2 * hstep)
    assert np.allclose(fd, -bessel_k(1 - nu, z) - nu / z * bessel_k(nu, z), rtol=1e-7)


@given(st.floats(0.01, 0.99), st.floats(1e-4, 50.0), st.floats(1e-3, 1.0))
def test_positive_and_decreasing_in_argument(nu, z, dz):
    a, b = bessel_k(nu, z), bessel_k(nu, z + dz)
    assert a > 0 and b > 0 and b < a


@given(st.floats(0.01, 0.5), st.floats(0.01, 0.45), st.floats(1e-3, 20.0))
def test_increasing_in_order(nu, dnu, z):
    assert bessel_k(nu + dnu, z) >= bessel_k(nu, z) * (1 - 1e-14)


@pytest.mark.parametrize("s", [0.1, 0.3, 0.5, 0.7, 0.9])
def test_profile_trace_deficit_follows_leading_term(s):
    # 1 - c_s z^s K_s(z) = G (z/2)^(2s) - (z/2)^2 / (1-s) + ...,  G = Gamma(1-s)/Gamma(1+s)
    c = constants(1, s).c_s
    for z in (1e-6, 1e-4):
        dev = 1.0 - c * z ** s * bessel_k(s, z)
        expansion = math.gamma(1 - s) / math.gamma(1 + s) * (z / 2) ** (2 * s) - (z / 2) ** 2 / (1 - s)
        assert dev == pytest.approx(expansion, rel=1e-3)


def test_gamma_values_and_domain():
    assert gamma(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-15)
    assert gamma(5) == pytest.approx(24.0)
    with pytest.raises(ValueError):
        gamma(0.0)


def test_constants_at_one_half():
    c = constants(1, 0.5)
    assert c.c_ds == pytest.approx(1 / math.pi, rel=1e-14)
    assert c.mu_s == pytest.approx(1.0, rel=1e-14)
    assert c.c_s == pytest.approx(math.sqrt(2 / math.pi), rel=1e-14)
    assert c.kappa_ds == pytest.approx(1 / math.pi, rel=1e-12)


@pytest.mark.parametrize("s", [0.2, 0.6])
def test_constants_normalise_poisson_kernel(s):
    from scipy.integrate import quad

    c = constants(1, s)
    mass = 2 * quad(lambda r: (1 + r * r) ** (-(1 + 2 * s) / 2), 0, np.inf, epsrel=1e-12)[0]
    assert c.kappa_ds * mass == pytest.approx(1.0, rel=1e-10)


@pytest.mark.parametrize("bad", [0.0, 1.0, -0.2, 1.5])
def test_fractional_order_rejected(bad):
    with pytest.raises(ValueError):
        FracOrder(bad)
    with pytest.raises(ValueError):
        constants(1, bad)


def test_domain_checks():
    with pytest.raises(ValueError):
        bessel_k(0.5, 0.0)
    with pytest.raises(ValueError):
        bessel_k(1.5, 1.0)
    with pytest.raises(ValueError):
        bessel_k_pair(0.7, 1.0)
