"""Acceptance suite: eleven numbered criteria with fixed tolerances.

Each criterion function returns ``(checks, details)``; :func:`run` wraps
that into a :class:`CriterionResult`.  A criterion passes only if every sub-check passes *and* it finishes inside its time
budget.  Details record the measured numbers so that a failure can be
analysed without rerunning.
"""

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import basis as _basis
from . import duality as _dual
from . import evolve as _ev
from . import extension as _ext
from . import singular as _sing
from .specfun import bessel_k, bessel_k_pair, constants

__all__ = ["CriterionResult", "CRITERIA", "run", "run_all", "format_result"]


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    runtime: float
    budget: float
    checks: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    @property
    def within_budget(self):
        return self.runtime < self.budget


def _bump(x, width=1.0, height=1.0):
    x = np.asarray(x, dtype=float)
    u = x / width
    out = np.zeros_like(x)
    m = np.abs(u) < 1
    out[m] = height * np.exp(1.0 - 1.0 / (1.0 - u[m] ** 2))
    return out


# ---------------------------------------------------------------------------


def c1_bessel():
    z = np.logspace(-3, np.log10(30), 400)
    closed = np.sqrt(np.pi / (2 * z)) * np.exp(-z)
    k_half = bessel_k(0.5, z)
    rel_half = float(np.max(np.abs(k_half - closed) / k_half))

    # K_{nu+1} and K_{nu-1} = K_{1-nu} come from independent evaluations for nu < 1/2
    zz = np.logspace(-3, np.log10(30), 200)
    rec = 0.0
    for nu in (0.05, 0.1, 0.2, 0.3, 0.4, 0.45):
        k_nu, k_nu1 = bessel_k_pair(nu, zz)
        k_m1 = bessel_k(1 - nu, zz)
        rec = max(rec, float(np.max(np.abs(k_nu1 - k_m1 - 2 * nu / zz * k_nu) / k_nu)))

    limit = {}
    for s in np.round(np.arange(0.1, 0.95, 0.1), 1):
        c = constants(1, s).c_s
        limit[float(s)] = abs(c * 1e-6 ** s * bessel_k(s, 1e-6) - 1.0)
    checks = {
        "k_half_closed_form": rel_half <= 1e-12,
        "recurrence": rec <= 1e-9,
        "trace_limit_all_s": all(v <= 1e-4 for v in limit.values()),
    }
    details = {"k_half_rel_err": rel_half, "recurrence_residual": rec, "trace_limit_dev": limit,
               "trace_limit_failing_s": [s for s, v in limit.items() if v > 1e-4]}
    return checks, details


def c2_profile_closed_form():
    b = _basis.build_basis(1.0, 1, 32)
    lam = b.lambdas[:32]
    y = np.concatenate([[0.0], np.logspace(-8, 1.5, 200)])
    psi = _ext.profile_psi(lam[:, None], 0.5, y[None, :])
    err = float(np.max(np.abs(psi - np.exp(-np.sqrt(lam)[:, None] * y[None, :]))))
    return {"max_err": err <= 1e-10}, {"max_err": err}


def c3_dtn():
    b = _basis.build_basis(1.0, 1, 64)
    f = b.mode(1) + 0.5 * b.mode(3)
    ys = (1e-1, 1e-2, 1e-3, 1e-4)
    checks, details = {}, {}
    for s in (0.25, 0.5, 0.75):
        ref = _basis.spectral_frac_laplacian(f, s)
        errs = [(_ext.dtn_flux(f, s, y) - ref).norm() for y in ys]
        checks[f"monotone_s={s}"] = all(b2 < a2 for a2, b2 in zip(errs, errs[1:]))
        checks[f"final_s={s}"] = errs[-1] <= 1e-3
        details[f"errors_s={s}"] = errs
    # s = 1/2 in closed form: per mode the error is sqrt(lam) (1 - exp(-sqrt(lam) y))
    sq = np.sqrt(b.lambdas[[0, 2]])
    details["closed_form_error_s=0.5"] = float(np.hypot(*(np.array([1.0, 0.5]) * sq * (1 - np.exp(-sq * 1e-4)))))
    return checks, details


def c4_energy():
    b = _basis.build_basis(1.0, 1, 64)
    f = b.mode(1) + 0.5 * b.mode(4)
    checks, details = {}, {}
    for s, tol in ((0.5, 1e-6), (0.3, 1e-3), (0.7, 1e-3)):
        rule = _ext.YRule.gauss_jacobi(s, n=64, rate=2 * math.sqrt(b.lambdas[0]))
        e = _ext.weighted_energy(_ext.extend_cylinder(f, s, rule))
        ref = _basis.hs_norm(f, s)
        rel = abs(e - ref) / ref
        checks[f"s={s}"] = rel <= tol
        details[f"rel_err_s={s}"] = rel
    return checks, details


def c5_poisson():
    checks, details = {}, {}
    for s in (0.25, 0.5, 0.75):
        dev = max(abs(_ext.poisson_kernel_mass(y, s) - 1.0) for y in (0.1, 1.0, 10.0))
        xs = np.linspace(-1.0, 1.0, 3)
        X = np.logspace(1, 3, 9)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", _ext.TruncationWarning)
            E = _ext.poisson_extend(xs, np.ones(3), s, X, 1.0)
        slope = _sing.loglog_slope(X, np.abs(E))
        target = -(1 + 2 * s)
        checks[f"mass_s={s}"] = dev <= 1e-6
        checks[f"slope_s={s}"] = abs(slope - target) <= 0.05 * abs(target)
        details[f"mass_dev_s={s}"] = dev
        details[f"slope_s={s}"] = slope
    return checks, details


def c6_linear_oracle():
    b = _basis.build_basis(1.0, 1, 128)
    s, T = 0.5, 0.5
    u0 = b.project(lambda x: _bump(x, 0.8))
    exact = _basis.Field.from_coeffs(b, np.exp(-b.lambdas ** s * T) * u0.coeffs)
    taus = (1 / 32, 1 / 64, 1 / 128)
    errs = []
    for tau in taus:
        tr = _ev.evolve(u0, T, _ev.SolverConfig(tau, operator="spectral"), _ev.Nonlinearity.linear(), s)
        errs.append((tr.final - exact).norm())
    orders = [math.log2(a / c) for a, c in zip(errs, errs[1:])]
    return {"order": min(orders) >= 0.9}, {"errors": errs, "orders": orders}


def _random_nonneg(rng, b, top):
    c = np.zeros(b.N)
    c[:8] = rng.normal(size=8) / np.arange(1, 9)
    v = b.synthesize(c) ** 2
    return v / v.max() * top


def c7_comparison(n_pairs=50, seed=7):
    b = _basis.build_basis(1.0, 1, 64)
    rng = np.random.default_rng(seed)
    checks, details = {}, {}
    for Phi in (_ev.Nonlinearity.linear(), _ev.Nonlinearity.porous_medium(2), _ev.Nonlinearity.stefan()):
        worst_gap, worst_low, worst_high = math.inf, math.inf, -math.inf
        for _ in range(n_pairs):
            u = _random_nonneg(rng, b, rng.uniform(0.5, 2.0))
            w = u + _random_nonneg(rng, b, rng.uniform(0.0, 1.0))
            r = _ev.compare(_basis.Field.from_values(b, u), _basis.Field.from_values(b, w),
                            _ev.SolverConfig(0.02), Phi, 0.5, T=0.2)
            worst_gap = min(worst_gap, r["min_gap"])
            for tr in (r["u"], r["w"]):
                V = tr.values
                worst_low = min(worst_low, float(V.min()))
                worst_high = max(worst_high, float(V.max() - np.max(np.abs(V[0]))))
        checks[f"ordered_{Phi.name}"] = worst_gap >= -1e-8
        checks[f"bounds_{Phi.name}"] = worst_low >= -1e-10 and worst_high <= 1e-10
        details[Phi.name] = {"min_gap": worst_gap, "min_value": worst_low, "excess_over_sup": worst_high}
    return checks, details


def c8_domain_monotonicity():
    rep = _ev.minimal_solution(lambda x: _bump(x, 1.0), [2, 4, 8], None, 1.0, _ev.SolverConfig(0.01),
                               _ev.Nonlinearity.porous_medium(2), 0.5, h=1 / 16)
    checks = {"nested": rep.r_violation <= 1e-8, "cauchy_decreasing": rep.cauchy[1] < rep.cauchy[0]}
    return checks, {"max_violation": rep.r_violation, "sup_diff_on_B2": rep.cauchy}


def c9_cutoff_scaling(alpha=1.5):
    s = 0.5
    Rs = (1, 2, 4, 8)
    p = _sing.default_p(s)
    rows = _sing.cutoff_scaling_scan(s, Rs)
    slope_lap = _sing.loglog_slope(Rs, [r[1] for r in rows])
    rows_tp = _sing.tp_scaling_scan(s, p, Rs)
    slope_tp = _sing.loglog_slope(Rs, [r[1] for r in rows_tp])
    rows_q, expo = _sing.qform_scaling_scan(s, alpha, Rs, p)
    slope_q = _sing.loglog_slope(Rs, [r[1] for r in rows_q])
    targets = {"cutoff": -2 * s, "tp": -p * s, "qform": -expo}
    measured = {"cutoff": slope_lap, "tp": slope_tp, "qform": slope_q}
    checks = {k: abs(measured[k] - targets[k]) <= 0.15 * abs(targets[k]) for k in targets}
    q = [r[1] for r in rows_q]
    local = [math.log2(a / c) for a, c in zip(q, q[1:])]
    details = {"p": p, "alpha": alpha, "targets": targets, "slopes": measured,
               "qform_local_slopes": [-v for v in local], "qform_l1": q}
    return checks, details


def c10_duality():
    b = _basis.build_basis(1.0, 1, 64)
    s, T = 0.5, 0.5
    chi = b.project(lambda x: np.cos(np.pi * x / 2) ** 2)
    Phi = _ev.Nonlinearity.porous_medium(2)
    u0 = b.project(lambda x: _bump(x, 0.7))
    u = _ev.evolve(u0, T, _ev.SolverConfig(1 / 32, eps=1e-9), Phi, s)
    w = _ev.evolve(u0, T, _ev.SolverConfig(1 / 64, eps=1e-9), Phi, s)
    coef = _dual.smooth_coefficient(_dual.build_coefficient(u, _dual.resample(w, u.times), Phi), k=16, n=16)

    res = {}
    lo, hi = math.inf, -math.inf
    for m in (1024, 2048):
        psi = _dual.backward_solve(coef, chi, T, s, inner_steps=m)
        lo, hi = min(lo, float(psi.values.min())), max(hi, float(psi.values.max()))
        res[m] = _dual.energy_identity_check(psi, coef, chi, s)["residual"]
    ratio = res[1024] / res[2048]

    psi1 = _dual.backward_solve(1.0, chi, T, s, inner_steps=64)
    sym = b.symbol(s, "discrete")
    closed = max(float(np.max(np.abs(b.synthesize(np.exp(-sym * (T - t)) * chi.coeffs) - f.values)))
                 for t, f in zip(psi1.times, psi1.fields))

    wit = _dual.uniqueness_witness(u, w, chi, 16, 16, Phi, s)
    checks = {
        "markov": lo >= -1e-8 and hi <= 1 + 1e-8,
        "energy_halving": 1.8 <= ratio <= 2.2,
        "closed_form": closed <= 1e-8,
        "witness_bounded": abs(wit["witness"]) <= wit["bound"] + 1e-6,
    }
    details = {"psi_range": [lo, hi], "energy_residuals": res, "ratio": ratio, "closed_form_err": closed,
               "witness": wit["witness"], "bound": wit["bound"]}
    return checks, details


def c11_translation():
    b = _basis.build_basis(1.0, 1, 64)
    s, T = 0.5, 0.5
    raw = np.sin(np.pi * b.nodes) * (1 - b.nodes ** 2)
    u0 = _basis.Field.from_values(b, raw / np.max(np.abs(raw)))
    Phi = _ev.Nonlinearity.porous_medium(3)
    cfg = _ev.SolverConfig(0.01, eps=1e-8)
    direct = _ev.evolve(u0, T, cfg, Phi, s)
    hat, Phi_hat, c = _ev.shift_reduce(u0, Phi)
    shifted = _ev.evolve(hat, T, cfg, Phi_hat, s, boundary_level=-c)
    diff = float(np.max(np.abs(shifted.values + c - direct.values)))
    return {"agree": diff <= 1e-8, "reduced_nonneg": float(hat.values.min()) >= 0.0}, {"max_diff": diff, "c": c}


CRITERIA = {
    1: ("Bessel layer", c1_bessel, 1.0),
    2: ("Extension closed form", c2_profile_closed_form, 1.0),
    3: ("Dirichlet-to-Neumann", c3_dtn, 5.0),
    4: ("Energy identity", c4_energy, 10.0),
    5: ("Poisson kernel", c5_poisson, 10.0),
    6: ("Linear evolution oracle", c6_linear_oracle, 30.0),
    7: ("L-infinity and comparison", c7_comparison, 180.0),
    8: ("Domain monotonicity", c8_domain_monotonicity, 120.0),
    9: ("Cut-off scaling", c9_cutoff_scaling, 120.0),
    10: ("Duality suite", c10_duality, 120.0),
    11: ("Translation trick", c11_translation, 60.0),
}


def run(number):
    name, func, budget = CRITERIA[number]
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", category=UserWarning)
        checks, details = func()
    dt = time.perf_counter() - t0
    checks = {k: bool(v) for k, v in checks.items()}
    passed = all(checks.values()) and dt < budget
    return CriterionResult(number, name, passed, dt, budget, checks, details)


def run_all(numbers=None):
    return [run(n) for n in (numbers or sorted(CRITERIA))]


def format_result(r):
    failed = [k for k, v in r.checks.items() if not v]
    status = "PASS" if r.passed else "FAIL"
    extra = "" if not failed else f" failed: {', '.join(failed)}"
    if not r.within_budget:
        extra += " over budget"
    return f"criterion {r.number:2d} {status} {r.name} ({r.runtime:.2f}s / {r.budget:g}s){extra}"
