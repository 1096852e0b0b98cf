import math
import warnings

import numpy as np
import pytest

from fracfilt.basis import build_basis, hs_norm, spectral_frac_laplacian
from fracfilt.extension import (
    EnergyWeight,
    TruncationWarning,
    YRule,
    check_energy_pairing_identity,
    dtn_flux,
    extend_cylinder,
    extension_gradient,
    poisson_extend,
    poisson_extend_gradient,
    poisson_kernel,
    poisson_kernel_mass,
    profile_flux,
    profile_psi,
    weighted_energy,
)
from fracfilt.singular import SmoothFunction
from fracfilt.specfun import constants

LAM = np.array([0.5, 2.0, 30.0])


def test_half_order_profile_is_exponential():
    y = np.logspace(-8, 1, 50)
    assert np.allclose(profile_psi(LAM[:, None], 0.5, y), np.exp(-np.sqrt(LAM)[:, None] * y), atol=1e-13)


@pytest.mark.parametrize("s", [0.2, 0.5, 0.8])
def test_profile_boundary_values(s):
    assert np.all(profile_psi(LAM, s, 0.0) == 1.0)
    assert np.allclose(profile_flux(LAM, s, 0.0), -LAM ** s / constants(1, s).mu_s, rtol=1e-13)
    y = np.linspace(0.0, 5.0, 60)
    psi = profile_psi(2.0, s, y)
    assert np.all(np.diff(psi) < 0) and psi[-1] > 0


@pytest.mark.parametrize("s", [0.25, 0.6])
def test_profile_solves_weighted_ode(s):
    # (y^{1-2s} psi')' = lam y^{1-2s} psi
    lam, hstep = 3.0, 1e-5
    y = np.linspace(0.1, 3.0, 30)
    lhs = (profile_flux(lam, s, y + hstep) - profile_flux(lam, s, y - hstep)) / (2 * hstep)
    rhs = lam * y ** (1 - 2 * s) * profile_psi(lam, s, y)
    assert np.allclose(lhs, rhs, rtol=1e-7)


def test_extension_trace_and_decay(basis64):
    f = basis64.mode(1) + 0.5 * basis64.mode(3)
    ext = extend_cylinder(f, 0.4, np.array([0.0, 5.0, 10.0]))
    assert ext.trace_error() < 1e-14
    n5, n10 = (np.linalg.norm(ext.values[i]) for i in (1, 2))
    rate = -math.log(n10 / n5) / 5.0
    assert rate == pytest.approx(math.sqrt(basis64.lambdas[0]), rel=0.05)


def test_gradient_matches_finite_differences(basis64):
    f = basis64.mode(2) - 0.2 * basis64.mode(5)
    s, x, y, hstep = 0.35, np.array([-0.4, 0.1, 0.6]), 0.3, 1e-6
    gx, gy = extension_gradient(f, s, x, y)
    up = extend_cylinder(f, s, [y + hstep]).source
    E = lambda xx, yy: f.basis.evaluate(profile_psi(f.basis.lambdas, s, yy) * f.coeffs, xx)
    fdx = (E(x + hstep, y) - E(x - hstep, y)) / (2 * hstep)
    fdy = (E(x, y + hstep) - E(x, y - hstep)) / (2 * hstep) * y ** (1 - 2 * s)
    assert up is f
    assert np.allclose(gx, fdx, atol=1e-7) and np.allclose(gy, fdy, atol=1e-7)


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_dtn_flux_converges_monotonically(basis64, s):
    f = basis64.mode(1) + 0.5 * basis64.mode(3)
    ref = spectral_frac_laplacian(f, s)
    errs = [(dtn_flux(f, s, y) - ref).norm() for y in (1e-1, 1e-2, 1e-3, 1e-4, 1e-6)]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    # per mode the flux error is O(lam y^{2-2s})
    assert errs[3] / errs[4] == pytest.approx(100 ** (2 - 2 * s), rel=0.05)


@pytest.mark.parametrize("s,tol", [(0.5, 1e-10), (0.3, 1e-6), (0.7, 1e-6)])
def test_weighted_energy_equals_hs_norm(basis64, s, tol):
    f = basis64.mode(1) + 0.5 * basis64.mode(4)
    rule = YRule.gauss_jacobi(s, n=64, rate=2 * math.sqrt(basis64.lambdas[0]))
    e = weighted_energy(extend_cylinder(f, s, rule))
    assert e == pytest.approx(hs_norm(f, s), rel=tol)


def test_weighted_energy_argument_checks(basis64):
    f = basis64.mode(1)
    with pytest.raises(TypeError):
        weighted_energy(f)
    with pytest.raises(ValueError):
        extend_cylinder(f, 0.3, YRule.gauss_jacobi(0.5))


def test_unresolved_tail_warns(basis64):
    f = basis64.mode(1)
    rule = YRule.gauss_jacobi(0.5, n=32, rate=50.0, n_tail=4)
    with pytest.warns(TruncationWarning):
        weighted_energy(extend_cylinder(f, 0.5, rule))


def test_energy_weight():
    w = EnergyWeight(2.0)
    y = np.linspace(0, 20, 400)
    rho = w(y)
    assert np.all(rho[y <= 1] == 1.0)
    assert np.all(np.abs(w.derivative(y)) <= 2.0 * rho + 1e-15)
    c, C = w.envelope
    far = y >= 1
    assert np.all(rho[far] >= c * np.exp(-2 * y[far]) * (1 - 1e-12))
    assert np.all(rho[far] <= C * np.exp(-2 * y[far]) * (1 + 1e-12))


# -- half-plane Poisson extension


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_poisson_kernel_has_unit_mass(s):
    for y in (0.1, 1.0, 10.0):
        assert poisson_kernel_mass(y, s) == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("s", [0.3, 0.5])
def test_poisson_extension_of_constant_and_trace(s):
    xs = np.linspace(-1, 1, 41)
    E = poisson_extend(xs, np.full(41, 2.0), s, np.array([-3.0, 0.0, 5.0]), 0.7, far_value=2.0)
    assert np.allclose(E, 2.0, atol=1e-12)
    vs = np.maximum(0.0, 1 - xs ** 2)
    xq = np.array([-0.5, 0.0, 0.3])
    assert np.allclose(poisson_extend(xs, vs, s, xq, 1e-7), 1 - xq ** 2, atol=2e-3)


@pytest.mark.parametrize("s", [0.3, 0.5, 0.7])
def test_poisson_gradient_matches_finite_differences(s):
    xs = np.linspace(-1, 1, 21)
    vs = np.cos(np.pi * xs / 2)
    x, y, hstep = np.array([-0.3, 0.45, 1.7]), 0.4, 1e-6
    gx, gy = poisson_extend_gradient(xs, vs, s, x, y)
    fdx = (poisson_extend(xs, vs, s, x + hstep, y) - poisson_extend(xs, vs, s, x - hstep, y)) / (2 * hstep)
    fdy = (poisson_extend(xs, vs, s, x, y + hstep) - poisson_extend(xs, vs, s, x, y - hstep)) / (2 * hstep)
    assert np.allclose(gx, fdx, atol=1e-7)
    assert np.allclose(gy, fdy * y ** (1 - 2 * s), atol=1e-7)


def test_poisson_edge_mismatch_warns_and_d2_refused():
    with pytest.warns(TruncationWarning):
        poisson_extend([0.0, 1.0], [1.0, 1.0], 0.5, 3.0, 1.0)
    with pytest.raises(NotImplementedError):
        poisson_kernel(0.0, 1.0, 0.5, d=2)


# -- pairing identity between the half-plane and cylinder extensions

A = 0.6


def _bump_v():
    def f(x):
        x = np.asarray(x, float)
        return np.where(np.abs(x) < A, (1 - (x / A) ** 2) ** 4, 0.0)

    def d2f(x):
        x = np.asarray(x, float)
        u = 1 - x ** 2 / A ** 2
        return np.where(np.abs(x) < A, 48 * x ** 2 * u ** 2 / A ** 4 - 8 * u ** 3 / A ** 2, 0.0)

    return SmoothFunction(f, d2f, support=(-A, A))


@pytest.mark.parametrize("s,ns", [(0.5, (32, 64, 128)), (0.3, (32, 64)), (0.7, (32, 64))])
def test_energy_pairing_identity(s, ns):
    b = build_basis(1.0, 1, 64)
    phi = b.mode(1) + 0.3 * b.mode(2)
    lhs, res = None, []
    for n in ns:
        r = check_energy_pairing_identity(_bump_v(), phi, s, n_samples=n, lhs=lhs)
        lhs = r["lhs"]
        res.append(r["residual"])
    assert res[1] <= 1e-3
    # piecewise-linear sampling of v: second order
    assert all(a / b >= 3.0 for a, b in zip(res, res[1:]))


def test_pairing_requires_compact_support(basis64):
    v = SmoothFunction(lambda x: np.cos(x), lambda x: -np.cos(x), period=2 * np.pi)
    with pytest.raises(ValueError):
        check_energy_pairing_identity(v, basis64.mode(1), 0.5)
