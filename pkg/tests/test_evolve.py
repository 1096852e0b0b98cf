import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fracfilt.basis import Field, build_basis
from fracfilt.evolve import (
    ConvergenceError,
    Nonlinearity,
    SolverConfig,
    Trajectory,
    compare,
    evolve,
    local_energy_check,
    minimal_solution,
    nested_basis,
    resolvent_step,
    shift_reduce,
    steklov_average,
    weak_form_residual,
)

NONLINEARITIES = [
    Nonlinearity.linear(),
    Nonlinearity.porous_medium(2),
    Nonlinearity.porous_medium(3.5),
    Nonlinearity.stefan(),
    Nonlinearity.tabulated([-1.0, 0.0, 0.5, 2.0], [-2.0, 0.0, 0.0, 3.0]),
]


def bump(x, width=0.8, height=1.0):
    x = np.asarray(x, float)
    out = np.zeros_like(x)
    m = np.abs(x) < width
    out[m] = height * np.exp(1 - 1 / (1 - (x[m] / width) ** 2))
    return out


@pytest.mark.parametrize("Phi", NONLINEARITIES, ids=lambda p: p.name)
def test_nonlinearity_derivative_and_potential(Phi):
    u = np.linspace(-1.7, 2.9, 47) + 1e-3
    hstep = 1e-6
    fd = (Phi(u + hstep) - Phi(u - hstep)) / (2 * hstep)
    assert np.allclose(Phi.dphi(u), fd, atol=1e-5)
    dpot = (Phi.potential(u + hstep) - Phi.potential(u - hstep)) / (2 * hstep)
    assert np.allclose(dpot, Phi(u), atol=1e-6)
    assert np.all(np.diff(Phi(u)) >= 0)
    assert Phi.lipschitz_on(-1.7, 2.9) >= np.max(np.abs(np.diff(Phi(u)) / np.diff(u))) - 1e-9


def test_shifted_nonlinearity():
    Phi = Nonlinearity.porous_medium(3)
    P = Phi.shifted(-0.4)
    v = np.linspace(0, 2, 11)
    assert np.allclose(P(v), Phi(v - 0.4) - Phi(np.array([-0.4])))
    assert P(np.zeros(1))[0] == 0.0 and P.potential(np.zeros(1))[0] == 0.0


def test_nonlinearity_validation():
    with pytest.raises(ValueError):
        Nonlinearity.porous_medium(0.5)
    with pytest.raises(ValueError):
        Nonlinearity.tabulated([0, 1, 2], [0, 2, 1])
    with pytest.raises(ValueError):
        Nonlinearity.from_spec({"name": "nope"})
    assert Nonlinearity.from_spec({"name": "pme", "m": 2}).params == {"m": 2.0}


def test_solver_config_validation():
    for kw in ({"tau": 0}, {"tau": 0.1, "eps": -1}, {"tau": 0.1, "operator": "x"},
               {"tau": 0.1, "newton_max_iter": 0}):
        with pytest.raises(ValueError):
            SolverConfig(**kw)


def test_linear_step_is_exact_resolvent(basis64):
    u = basis64.project(bump)
    cfg = SolverConfig(0.1, operator="spectral")
    out, diag = resolvent_step(u, cfg, Nonlinearity.linear(), 0.5)
    expected = u.coeffs / (1 + 0.1 * basis64.lambdas ** 0.5)
    assert np.allclose(out.coeffs, expected, atol=1e-12)
    assert diag["residual"] < 1e-11


def test_linear_evolution_first_order():
    b = build_basis(1.0, 1, 64)
    u0 = b.project(bump)
    exact = np.exp(-b.lambdas ** 0.5 * 0.5) * u0.coeffs
    errs = [np.linalg.norm(evolve(u0, 0.5, SolverConfig(t, operator="spectral"), Nonlinearity.linear(), 0.5).final.coeffs - exact)
            for t in (1 / 16, 1 / 32, 1 / 64)]
    assert all(0.9 <= math.log2(a / c) <= 1.1 for a, c in zip(errs, errs[1:]))


@pytest.mark.parametrize("Phi", NONLINEARITIES[:4], ids=lambda p: p.name)
def test_maximum_principle_and_energy_decay(basis64, Phi):
    u0 = basis64.project(lambda x: bump(x, 0.7, 2.0))
    tr = evolve(u0, 0.3, SolverConfig(0.03), Phi, 0.5)
    V = tr.values
    assert V.min() >= -1e-12
    assert np.all(np.diff(tr.sup_norms) <= 1e-12)
    energy = [float(np.sum(basis64.weights * Phi.potential(v))) for v in V]
    assert np.all(np.diff(energy) <= 1e-12)


def test_l1_contraction(basis64, rng):
    Phi = Nonlinearity.porous_medium(2)
    u0 = Field.from_values(basis64, bump(basis64.nodes, 0.6, 1.5))
    w0 = Field.from_values(basis64, bump(basis64.nodes - 0.2, 0.5, 1.0))
    cfg = SolverConfig(0.02, eps=1e-9)
    u = evolve(u0, 0.4, cfg, Phi, 0.4)
    w = evolve(w0, 0.4, cfg, Phi, 0.4)
    d = np.sum(basis64.weights * np.abs(u.values - w.values), axis=1)
    assert np.all(np.diff(d) <= 1e-10)


@pytest.mark.parametrize("Phi", NONLINEARITIES[:4], ids=lambda p: p.name)
def test_weak_form_vanishes(basis64, Phi):
    u0 = basis64.project(lambda x: bump(x, 0.7, 1.5))
    chi = basis64.project(lambda x: np.cos(np.pi * x / 2))
    tr = evolve(u0, 0.2, SolverConfig(0.02, eps=0.0 if Phi.name == "linear" else 1e-12), Phi, 0.6)
    assert weak_form_residual(tr, Phi, 0.6, chi) < 1e-9


def test_shift_equivariance(basis64):
    raw = np.sin(np.pi * basis64.nodes) * (1 - basis64.nodes ** 2)
    u0 = Field.from_values(basis64, raw)
    Phi = Nonlinearity.porous_medium(3)
    cfg = SolverConfig(0.02, eps=1e-8)
    direct = evolve(u0, 0.2, cfg, Phi, 0.5)
    hat, P, c = shift_reduce(u0, Phi)
    assert hat.values.min() == 0.0 and c < 0
    red = evolve(hat, 0.2, cfg, P, 0.5, boundary_level=-c)
    assert np.max(np.abs(red.shifted(c).values - direct.values)) < 1e-8


@given(st.integers(0, 2 ** 32 - 1))
def test_comparison_random_pairs(seed):
    b = build_basis(1.0, 1, 24)
    r = np.random.default_rng(seed)
    u = np.abs(b.synthesize(np.r_[r.normal(size=4), np.zeros(20)]))
    w = u + np.abs(b.synthesize(np.r_[r.normal(size=3), np.zeros(21)]))
    res = compare(Field.from_values(b, u), Field.from_values(b, w), SolverConfig(0.05), Nonlinearity.stefan(), 0.5, T=0.2)
    assert res["ordered"]


def test_compare_rejects_unordered(basis64):
    u = basis64.mode(1)
    with pytest.raises(ValueError):
        compare(u, 0.5 * u, SolverConfig(0.1), Nonlinearity.linear(), 0.5)


def test_minimal_solution_nested_and_cauchy():
    rep = minimal_solution(lambda x: bump(x, 1.0), [2, 4, 8], [1.0, 2.0], 0.5, SolverConfig(0.05),
                           Nonlinearity.porous_medium(2), 0.5, h=1 / 8)
    assert not rep.flagged
    assert rep.r_violation <= 1e-8 and rep.k_violation <= 1e-8
    assert rep.cauchy[1] < rep.cauchy[0]
    assert rep.limit.basis.R == 8


def test_minimal_solution_preconditions():
    cfg = SolverConfig(0.1)
    with pytest.raises(ValueError):
        minimal_solution(lambda x: -bump(x), [2, 4], None, 0.2, cfg, Nonlinearity.linear(), 0.5)
    with pytest.raises(ValueError):
        minimal_solution(bump, [2, 4], None, 0.2, cfg, Nonlinearity.tabulated([0, 1], [1, 2]), 0.5)
    with pytest.raises(ValueError):
        minimal_solution(bump, [4, 2], None, 0.2, cfg, Nonlinearity.linear(), 0.5)
    with pytest.raises(ValueError):
        nested_basis(1.0, 0.3)
    small, big = nested_basis(1.0, 0.125), nested_basis(2.0, 0.125)
    assert np.all(np.isin(np.round(small.nodes, 12), np.round(big.nodes, 12)))


def test_steklov_average_of_linear_in_time_data(basis64):
    g = basis64.project(bump)
    times = np.linspace(0, 1, 11)
    tr = Trajectory(times, tuple(g * t for t in times), (), 0.0, {})
    avg = steklov_average(tr, 0.25)
    for t, f in zip(avg.times, avg.fields):
        assert np.allclose(f.values, (t + 0.125) * g.values, atol=1e-13)
    with pytest.raises(ValueError):
        steklov_average(tr, 2.0)


def test_local_energy_bound():
    b = build_basis(2.0, 1, 64)
    Phi = Nonlinearity.porous_medium(2)
    tr = evolve(b.project(lambda x: bump(x, 1.2, 1.0)), 0.3, SolverConfig(0.03), Phi, 0.5)
    res = local_energy_check(tr, 0.6, Phi, 0.5)
    assert res["holds"] and res["lhs"] > 0 and res["C_needed"] <= res["C"]
    with pytest.raises(ValueError):
        local_energy_check(tr, 0.2, Phi, 0.5)


def test_newton_failure_raises_with_diagnostics(basis64):
    u0 = basis64.project(lambda x: 5.0 * (np.abs(x) < 0.5))
    cfg = SolverConfig(10.0, newton_max_iter=1, max_substeps=0)
    with pytest.raises(ConvergenceError) as info:
        evolve(u0, 10.0, cfg, Nonlinearity.porous_medium(4), 0.5)
    assert info.value.diagnostics is not None


def test_evolve_input_checks(basis64):
    with pytest.raises(ValueError):
        evolve(basis64.mode(1), 0.0, SolverConfig(0.1), Nonlinearity.linear(), 0.5)
    with pytest.raises(ValueError):
        evolve(Field.from_values(basis64, np.r_[np.nan, np.zeros(63)]), 1.0, SolverConfig(0.1),
               Nonlinearity.linear(), 0.5)
    with pytest.raises(ValueError):
        evolve(basis64.mode(1), 1.0, SolverConfig(0.1), Nonlinearity.linear(), 1.2)
