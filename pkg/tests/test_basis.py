import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fracfilt.basis import Field, build_basis, dom_norm, hs_norm, spectral_frac_laplacian


def test_round_trip(basis64, rng):
    v = rng.normal(size=64)
    f = Field.from_values(basis64, v)
    assert np.allclose(basis64.synthesize(f.coeffs), v, atol=1e-13)


def test_discrete_orthonormality(basis64):
    assert np.allclose(basis64.gram(), np.eye(64), atol=1e-12)


def test_discrete_eigenvalues_match_three_point_laplacian(basis64):
    b = basis64
    A = (np.diag(2 * np.ones(b.N)) - np.diag(np.ones(b.N - 1), 1) - np.diag(np.ones(b.N - 1), -1)) / b.h ** 2
    for k in (1, 5, 40):
        m = b.mode(k)
        assert np.allclose(A @ m.values, b.discrete_lambdas[k - 1] * m.values, atol=1e-8 * b.discrete_lambdas[k - 1])


def test_discrete_power_is_z_matrix(basis64):
    b = basis64
    for s in (0.25, 0.5, 0.75):
        M = np.column_stack([b.apply_power(e, s, "discrete") for e in np.eye(b.N)])
        off = M - np.diag(np.diag(M))
        assert off.max() <= 1e-12


def test_mode_is_eigenfunction(basis64):
    m = basis64.mode(3)
    out = spectral_frac_laplacian(m, 0.4)
    assert np.allclose(out.values, basis64.lambdas[2] ** 0.4 * m.values, atol=1e-12)


def test_power_one_is_second_derivative():
    b = build_basis(1.0, 1, 256)
    f = b.project(lambda x: np.sin(np.pi * (x + 1)))  # mode 2 exactly
    out = spectral_frac_laplacian(f, 1.0)
    assert np.allclose(out.values, np.pi ** 2 * f.values, atol=1e-10)


def test_norms(basis64):
    f = basis64.mode(2) * 2.0
    lam = basis64.lambdas[1]
    assert hs_norm(f, 0.3) == pytest.approx(2 * lam ** 0.15)
    assert dom_norm(f, 0.3) == pytest.approx(2 * lam ** 0.3)


def test_field_arithmetic_and_mismatch(basis64):
    a, b = basis64.mode(1), basis64.mode(2)
    assert (a + b - a).inner(b) == pytest.approx(1.0)
    assert (-a).norm() == pytest.approx(1.0)
    with pytest.raises(ValueError):
        a + build_basis(1.0, 1, 64).mode(1)
    with pytest.raises(ValueError):
        Field.from_values(basis64, np.zeros(3))


def test_evaluation_off_grid(basis64):
    f = basis64.mode(1)
    x = np.array([-0.3, 0.0, 0.77])
    assert np.allclose(f(x), np.cos(np.pi * x / 2), atol=1e-12)


def test_build_basis_validation():
    with pytest.raises(ValueError):
        build_basis(1.0, 1, 0)
    with pytest.raises(ValueError):
        build_basis(-1.0, 1, 8)
    with pytest.raises(NotImplementedError):
        build_basis(1.0, 2, 8)


@given(arrays(np.float64, 32, elements=st.floats(-1e3, 1e3)), st.floats(0.05, 0.95))
def test_semigroup_property(v, s):
    b = build_basis(1.0, 1, 32)
    f = Field.from_values(b, v)
    once = spectral_frac_laplacian(f, 2 * s)
    twice = spectral_frac_laplacian(spectral_frac_laplacian(f, s), s)
    scale = max(1.0, np.abs(once.values).max())
    assert np.allclose(once.values, twice.values, atol=1e-10 * scale)
