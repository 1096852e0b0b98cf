r"""Implicit resolvent stepping for ``u_t + (-Delta)^s_R Phi(u) = 0`` on a ball.

Each step solves

    u + tau S (Phi_eps(u) - Phi_eps(g)) = u_n

for the grid values ``u``, where ``S`` is the fractional power of the
Dirichlet Laplacian (applied by sine transforms), ``Phi_eps = Phi + eps id``
and ``g`` is a constant *boundary level* (zero for the plain problem).  The
boundary level makes the shift ``u -> u - c`` an exact symmetry of the
discrete problem.

Newton's method is applied with the Jacobian ``I + tau S D``, ``D =
Phi_eps'(u)``.  Writing the correction as ``delta = F - tau S D^{1/2} q``
turns the linear solve into ``(I + tau D^{1/2} S D^{1/2}) q = D^{1/2} F``,
which is symmetric positive definite even where ``D`` vanishes and is solved
matrix-free by conjugate gradients.

With the default ``operator="discrete"`` the fractional power is taken of the
three-point Laplacian.  Its matrix has non-positive off-diagonal entries and
positive row sums, so the scheme satisfies a discrete comparison principle,
discrete ``L^inf`` bounds and domain monotonicity on nested grids.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg
from scipy.special import beta as beta_fn

from .basis import OPERATORS, Field, build_basis
from .specfun import FracOrder, constants

__all__ = [
    "ConvergenceError",
    "Nonlinearity",
    "SolverConfig",
    "Trajectory",
    "resolvent_step",
    "evolve",
    "compare",
    "minimal_solution",
    "MinimalReport",
    "shift_reduce",
    "steklov_average",
    "local_energy_check",
    "weak_form_residual",
    "nested_basis",
]


class ConvergenceError(RuntimeError):
    """Newton iteration failed; ``diagnostics`` holds the iteration history."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


# ---------------------------------------------------------------------------
# nonlinearities


@dataclass(frozen=True, eq=False)
class Nonlinearity:
    """Nondecreasing, locally Lipschitz ``Phi`` with derivative and potential.

    ``potential(u) = int_0^u Phi``.  ``lip(lo, hi)`` bounds the Lipschitz
    constant of ``Phi`` on ``[lo, hi]``.  ``degenerate`` marks nonlinearities
    whose derivative vanishes somewhere, for which a small regularisation is
    applied by default.
    """

    name: str
    phi: object
    dphi: object
    potential: object
    lip: object
    degenerate: bool = False
    params: dict = field(default_factory=dict)

    def __call__(self, u):
        return self.phi(np.asarray(u, dtype=float))

    def lipschitz_on(self, lo, hi):
        if lo > hi:
            raise ValueError("empty interval")
        return float(self.lip(float(lo), float(hi)))

    @property
    def phi0_zero(self):
        return float(self.phi(np.zeros(1))[0]) == 0.0

    def shifted(self, c):
        """``v -> Phi(v + c) - Phi(c)``, with matching derivative and potential."""
        c = float(c)
        phi_c = float(self.phi(np.array([c]))[0])
        psi_c = float(self.potential(np.array([c]))[0])
        base = self
        return Nonlinearity(
            name=f"{self.name}@{c!r}",
            phi=lambda v: base.phi(np.asarray(v, float) + c) - phi_c,
            dphi=lambda v: base.dphi(np.asarray(v, float) + c),
            potential=lambda v: base.potential(np.asarray(v, float) + c) - psi_c
            - phi_c * np.asarray(v, float),
            lip=lambda lo, hi: base.lip(lo + c, hi + c),
            degenerate=self.degenerate,
            params={**self.params, "shift": c},
        )

    # built-ins

    @classmethod
    def linear(cls):
        return cls("linear", phi=lambda u: np.asarray(u, float) * 1.0,
                   dphi=lambda u: np.ones(np.shape(u)),
                   potential=lambda u: 0.5 * np.asarray(u, float) ** 2,
                   lip=lambda lo, hi: 1.0)

    @classmethod
    def porous_medium(cls, m):
        m = float(m)
        if m < 1:
            raise ValueError("porous medium exponent must satisfy m >= 1 (fast diffusion is not supported)")
        return cls(
            "pme",
            phi=lambda u: np.asarray(u, float) * np.abs(u) ** (m - 1),
            dphi=lambda u: m * np.abs(np.asarray(u, float)) ** (m - 1),
            potential=lambda u: np.abs(np.asarray(u, float)) ** (m + 1) / (m + 1),
            lip=lambda lo, hi: m * max(abs(lo), abs(hi)) ** (m - 1),
            degenerate=m > 1,
            params={"m": m},
        )

    @classmethod
    def stefan(cls):
        return cls(
            "stefan",
            phi=lambda u: np.maximum(np.asarray(u, float) - 1.0, 0.0),
            dphi=lambda u: (np.asarray(u, float) > 1.0).astype(float),
            potential=lambda u: 0.5 * np.maximum(np.asarray(u, float) - 1.0, 0.0) ** 2,
            lip=lambda lo, hi: 1.0 if hi > 1.0 else 0.0,
            degenerate=True,
        )

    @classmethod
    def tabulated(cls, xs, ys):
        """Piecewise-linear interpolant of a nondecreasing table, extended by constants."""
        xs = np.asarray(xs, float)
        ys = np.asarray(ys, float)
        if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 2:
            raise ValueError("table needs two 1D arrays of equal length >= 2")
        if np.any(np.diff(xs) <= 0):
            raise ValueError("table abscissae must be strictly increasing")
        if np.any(np.diff(ys) < 0):
            raise ValueError("tabulated nonlinearity must be nondecreasing")
        slopes = np.diff(ys) / np.diff(xs)

        def dphi(u):
            u = np.asarray(u, float)
            i = np.clip(np.searchsorted(xs, u, side="right") - 1, 0, slopes.size - 1)
            inside = (u >= xs[0]) & (u < xs[-1])
            return np.where(inside, slopes[i], 0.0)

        grid = np.union1d(xs, [0.0])

        def potential(u):
            u = np.asarray(u, float)
            lo = min(grid[0], float(np.min(u, initial=0.0))) - 1.0
            hi = max(grid[-1], float(np.max(u, initial=0.0))) + 1.0
            knots = np.union1d(grid, [lo, hi])
            vals = np.interp(knots, xs, ys)
            cum = np.concatenate([[0.0], np.cumsum(np.diff(knots) * 0.5 * (vals[1:] + vals[:-1]))])
            at0 = np.interp(0.0, knots, cum)
            j = np.clip(np.searchsorted(knots, u, side="right") - 1, 0, knots.size - 2)
            t = u - knots[j]
            vu = np.interp(u, xs, ys)
            return cum[j] + 0.5 * t * (vals[j] + vu) - at0

        return cls(
            "table",
            phi=lambda u: np.interp(np.asarray(u, float), xs, ys),
            dphi=dphi,
            potential=potential,
            lip=lambda lo, hi: float(np.max(slopes[(xs[1:] > lo) & (xs[:-1] < hi)], initial=0.0)),
            degenerate=bool(np.any(slopes == 0)),
            params={"xs": xs.tolist(), "ys": ys.tolist()},
        )

    @classmethod
    def from_spec(cls, spec):
        """Build from ``{"name": ..., "m": ...}`` or ``{"name": "table", "xs": [...], "ys": [...]}``."""
        name = spec.get("name")
        if name == "linear":
            return cls.linear()
        if name in ("pme", "porous_medium"):
            return cls.porous_medium(spec.get("m", 2.0))
        if name == "stefan":
            return cls.stefan()
        if name == "table":
            return cls.tabulated(spec["xs"], spec["ys"])
        raise ValueError(f"unknown nonlinearity {name!r}")


# ---------------------------------------------------------------------------
# solver


@dataclass(frozen=True)
class SolverConfig:
    """Time step and Newton/CG controls.

    ``eps=None`` selects ``1e-8 * ||u0||_inf`` for degenerate nonlinearities
    and 0 otherwise.
    """

    tau: float
    eps: float = None
    newton_tol: float = 1e-12
    newton_max_iter: int = 50
    damping: bool = True
    max_halvings: int = 8
    operator: str = "discrete"
    cg_tol: float = 1e-13
    max_substeps: int = 4

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau!r}")
        if self.eps is not None and not self.eps >= 0:
            raise ValueError(f"eps must be non-negative, got {self.eps!r}")
        if self.operator not in OPERATORS:
            raise ValueError(f"operator must be one of {OPERATORS}")
        if self.newton_max_iter < 1:
            raise ValueError("newton_max_iter must be at least 1")

    def resolved_eps(self, Phi, u0_sup):
        if self.eps is not None:
            return float(self.eps)
        return 1e-8 * float(u0_sup) if Phi.degenerate else 0.0


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Snapshots of a solution at strictly increasing times."""

    times: np.ndarray
    fields: tuple
    diagnostics: tuple = ()
    boundary_level: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or t.size != len(self.fields) or t.size == 0:
            raise ValueError("times and fields must have the same positive length")
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        b = self.fields[0].basis
        if any(f.basis is not b for f in self.fields):
            raise ValueError("all snapshots must share one basis")

    @property
    def basis(self):
        return self.fields[0].basis

    @property
    def values(self):
        return np.array([f.values for f in self.fields])

    @property
    def coeffs(self):
        return np.array([f.coeffs for f in self.fields])

    @property
    def sup_norms(self):
        return np.array([np.max(np.abs(f.values)) for f in self.fields])

    @property
    def final(self):
        return self.fields[-1]

    def __len__(self):
        return len(self.fields)

    def shifted(self, c):
        """Trajectory of ``u + c`` (grid values shifted, boundary level too)."""
        fields = tuple(Field.from_values(f.basis, f.values + c) for f in self.fields)
        return Trajectory(self.times, fields, self.diagnostics, self.boundary_level + c, dict(self.meta))


def _operator(basis, s, operator):
    sym = basis.symbol(s, operator)
    return lambda v: basis.synthesize(sym * basis.analyze(v))


def resolvent_step(u_n, cfg, Phi, s, eps=0.0, boundary_level=0.0, guess=None):
    """One implicit step; returns ``(u_{n+1}, diagnostics)``.

    Raises :class:`ConvergenceError` when the damped Newton iteration does not
    reach ``cfg.newton_tol`` in ``cfg.newton_max_iter`` iterations.
    """
    s = FracOrder(s)
    basis = u_n.basis
    S = _operator(basis, s, cfg.operator)
    tau = cfg.tau
    g = float(boundary_level)
    phi_g = float(Phi(np.array([g]))[0]) + eps * g
    un = u_n.values

    def phi_eps(u):
        return Phi(u) + eps * u

    def residual(u):
        return u + tau * S(phi_eps(u) - phi_g) - un

    u = un.copy() if guess is None else np.array(guess, dtype=float)
    F = residual(u)
    rnorm = float(np.max(np.abs(F)))
    history = [rnorm]
    cg_iters = 0
    scale = max(1.0, float(np.max(np.abs(un))))
    tol = cfg.newton_tol * scale
    it = 0
    while rnorm > tol:
        if it >= cfg.newton_max_iter:
            raise ConvergenceError(f"Newton did not converge in {it} iterations (residual {rnorm:.3e})",
                                   {"residuals": history, "cg_iterations": cg_iters})
        it += 1
        D = np.maximum(Phi.dphi(u), 0.0) + eps
        sqD = np.sqrt(D)
        count = [0]

        def matvec(q):
            count[0] += 1
            return q + tau * sqD * S(sqD * q)

        A = LinearOperator((basis.N, basis.N), matvec=matvec, dtype=float)
        rhs = sqD * F
        if np.any(rhs):
            q, info = cg(A, rhs, rtol=cfg.cg_tol, atol=0.0, maxiter=10 * basis.N)
            if info < 0:
                raise ConvergenceError("CG breakdown", {"residuals": history})
        else:
            q = np.zeros_like(rhs)
        cg_iters += count[0]
        delta = F - tau * S(sqD * q)
        theta = 1.0
        u_try = u - delta
        F_try = residual(u_try)
        r_try = float(np.max(np.abs(F_try)))
        if cfg.damping:
            halvings = 0
            while r_try >= rnorm and halvings < cfg.max_halvings:
                theta *= 0.5
                halvings += 1
                u_try = u - theta * delta
                F_try = residual(u_try)
                r_try = float(np.max(np.abs(F_try)))
            if r_try >= rnorm and r_try > tol:
                raise ConvergenceError(f"line search stalled at residual {rnorm:.3e}",
                                       {"residuals": history, "cg_iterations": cg_iters})
        u, F, rnorm = u_try, F_try, r_try
        history.append(rnorm)
    diag = {"newton_iterations": it, "residual": rnorm, "cg_iterations": cg_iters}
    return Field.from_values(basis, u), diag


def _step_adaptive(u, cfg, Phi, s, eps, g, depth=0):
    try:
        v, diag = resolvent_step(u, cfg, Phi, s, eps, g)
        diag["substeps"] = 1
        return v, diag
    except ConvergenceError:
        if depth >= cfg.max_substeps:
            raise
    half = replace(cfg, tau=0.5 * cfg.tau)
    v, d1 = _step_adaptive(u, half, Phi, s, eps, g, depth + 1)
    v, d2 = _step_adaptive(v, half, Phi, s, eps, g, depth + 1)
    return v, {
        "newton_iterations": d1["newton_iterations"] + d2["newton_iterations"],
        "residual": max(d1["residual"], d2["residual"]),
        "cg_iterations": d1["cg_iterations"] + d2["cg_iterations"],
        "substeps": d1["substeps"] + d2["substeps"],
    }


def evolve(u0, T, cfg, Phi, s, boundary_level=0.0):
    """March ``u0`` to time ``T`` with implicit steps of size at most ``cfg.tau``.

    The step is adjusted to ``T / ceil(T / tau)`` so the horizon is hit
    exactly.  A failed step is retried as two half steps (recursively, up to
    ``cfg.max_substeps`` levels) before the failure propagates.
    """
    s = FracOrder(s)
    if not T > 0:
        raise ValueError(f"horizon must be positive, got {T!r}")
    if not np.all(np.isfinite(u0.values)):
        raise ValueError("initial datum must be finite")
    n = max(1, math.ceil(T / cfg.tau - 1e-9))
    tau = T / n
    step_cfg = replace(cfg, tau=tau)
    eps = cfg.resolved_eps(Phi, np.max(np.abs(u0.values - boundary_level)))
    fields = [u0]
    diags = []
    u = u0
    for _ in range(n):
        u, d = _step_adaptive(u, step_cfg, Phi, s, eps, boundary_level)
        fields.append(u)
        diags.append(d)
    times = tau * np.arange(n + 1)
    times[-1] = T
    meta = {"tau": tau, "eps": eps, "s": float(s), "operator": cfg.operator, "nonlinearity": Phi.name}
    return Trajectory(times, tuple(fields), tuple(diags), float(boundary_level), meta)


def compare(u0, w0, cfg, Phi, s, T=1.0, tol=1e-8):
    """Evolve an ordered pair and report the smallest gap ``min(w - u)``."""
    if u0.basis is not w0.basis:
        raise ValueError("data must share a basis")
    if np.any(u0.values > w0.values + 1e-14):
        raise ValueError("initial data are not ordered (u0 <= w0 required)")
    if cfg.eps is None:
        # one regularisation for both members of the pair
        sup = max(np.max(np.abs(u0.values)), np.max(np.abs(w0.values)))
        cfg = replace(cfg, eps=cfg.resolved_eps(Phi, sup))
    u = evolve(u0, T, cfg, Phi, s)
    w = evolve(w0, T, cfg, Phi, s)
    gap = w.values - u.values
    return {
        "min_gap": float(np.min(gap)),
        "ordered": bool(np.min(gap) >= -tol),
        "u": u,
        "w": w,
    }


# ---------------------------------------------------------------------------
# shift and minimal solutions


def shift_reduce(u0, Phi):
    """Return ``(u0 - c, Phi(. + c) - Phi(c), c)`` with ``c = min u0``.

    Evolving the reduced pair with boundary level ``-c`` and adding ``c``
    back reproduces the evolution of ``(u0, Phi)`` with boundary level 0.
    """
    c = float(np.min(u0.values))
    return Field.from_values(u0.basis, u0.values - c), Phi.shifted(c), c


def nested_basis(R, h):
    """Basis on ``B_R`` whose nodes are the multiples of ``h`` inside the ball.

    Bases built with the same ``h`` are nested: the nodes of a smaller ball
    are a subset of those of a larger one.
    """
    n = 2 * R / h
    if abs(n - round(n)) > 1e-9:
        raise ValueError(f"2R/h must be an integer, got {n!r}")
    return build_basis(R, 1, int(round(n)) - 1)


def _restrict(field_big, basis_small):
    # values of the big-ball field at the small-ball nodes
    idx = np.rint((basis_small.nodes - field_big.basis.nodes[0]) / field_big.basis.h).astype(int)
    return field_big.values[idx]


@dataclass(frozen=True, eq=False)
class MinimalReport:
    solutions: dict
    r_violation: float
    k_violation: float
    cauchy: list
    limit: Field
    flagged: bool


def minimal_solution(u0, R_list, k_list, T, cfg, Phi, s, h=1.0 / 16, tol=1e-8):
    """Ball solutions with truncated data ``u0 chi_{B_k}`` on nested grids.

    ``u0`` is a callable on the line.  Monotonicity in ``R`` (on the smaller
    ball) and in ``k`` is measured at the final time and at every stored
    time.  ``cauchy[i]`` is the sup-difference between consecutive radii on
    ``B_{R_list[0]}`` for the largest ``k``.
    """
    R_list = [float(r) for r in R_list]
    k_list = [math.inf] if k_list is None else [float(k) for k in k_list]
    if any(b <= a for a, b in zip(R_list, R_list[1:])) or any(b <= a for a, b in zip(k_list, k_list[1:])):
        raise ValueError("radius and truncation lists must be increasing")
    if not Phi.phi0_zero:
        raise ValueError("minimal solutions need Phi(0) = 0")
    bases = {R: nested_basis(R, h) for R in R_list}
    sup0 = max(float(np.max(np.abs(u0(b.nodes)))) for b in bases.values())
    if np.any([np.min(u0(b.nodes)) < 0 for b in bases.values()]):
        raise ValueError("minimal solutions need u0 >= 0")
    if cfg.eps is None:
        cfg = replace(cfg, eps=cfg.resolved_eps(Phi, sup0))
    sols = {}
    for k in k_list:
        for R in R_list:
            b = bases[R]
            x = b.nodes
            vals = np.where(np.abs(x) < k, u0(x), 0.0)
            sols[(k, R)] = evolve(Field.from_values(b, vals), T, cfg, Phi, s)
    r_viol = 0.0
    for k in k_list:
        for R1, R2 in zip(R_list, R_list[1:]):
            small = sols[(k, R1)]
            big = sols[(k, R2)]
            for f1, f2 in zip(small.fields, big.fields):
                r_viol = max(r_viol, float(np.max(f1.values - _restrict(f2, bases[R1]))))
    k_viol = 0.0
    for R in R_list:
        for k1, k2 in zip(k_list, k_list[1:]):
            a = sols[(k1, R)].values
            b = sols[(k2, R)].values
            k_viol = max(k_viol, float(np.max(a - b)))
    kmax = k_list[-1]
    base0 = bases[R_list[0]]
    cauchy = []
    for R1, R2 in zip(R_list, R_list[1:]):
        u1 = _restrict(sols[(kmax, R1)].final, base0)
        u2 = _restrict(sols[(kmax, R2)].final, base0)
        cauchy.append(float(np.max(np.abs(u2 - u1))))
    return MinimalReport(sols, r_viol, k_viol, cauchy, sols[(kmax, R_list[-1])].final,
                         flagged=bool(r_viol > tol or k_viol > tol))


# ---------------------------------------------------------------------------
# averages and energy


def steklov_average(traj, h):
    """``f_h(t) = (1/h) int_t^{t+h} f`` of the piecewise-linear-in-time interpolant.

    Returned at every stored time ``t`` with ``t + h`` inside the span.
    """
    t = traj.times
    if not h > 0:
        raise ValueError("window must be positive")
    if h > t[-1] - t[0] + 1e-12:
        raise ValueError("window exceeds the trajectory span")
    vals = traj.values
    cum = np.concatenate([np.zeros((1, vals.shape[1])),
                          np.cumsum(0.5 * np.diff(t)[:, None] * (vals[1:] + vals[:-1]), axis=0)])

    def primitive(tt):
        j = int(np.clip(np.searchsorted(t, tt, side="right") - 1, 0, t.size - 2))
        dt = tt - t[j]
        w = dt / (t[j + 1] - t[j])
        ft = (1 - w) * vals[j] + w * vals[j + 1]
        return cum[j] + 0.5 * dt * (vals[j] + ft)

    keep = t + h <= t[-1] + 1e-12 * max(1.0, t[-1])
    out_t = t[keep]
    out = [Field.from_values(traj.basis, (primitive(min(tt + h, t[-1])) - primitive(tt)) / h) for tt in out_t]
    return Trajectory(out_t, tuple(out), (), traj.boundary_level, {**traj.meta, "steklov_window": h})


def _half_disk_tables(basis, s, r, n_x, n_y, levels):
    from .extension import graded_rule, profile_flux, profile_psi
    from scipy.special import roots_legendre

    xl, wl = roots_legendre(n_x)
    x = r * xl
    wx = r * wl
    Y = np.sqrt(np.maximum(r * r - x * x, 0.0))
    yt, wt = graded_rule(Y, 1 - 2 * s, n_y, levels)
    yn, wn = graded_rule(Y, 2 * s - 1, n_y, levels)
    lam = basis.lambdas
    psi = profile_psi(lam, s, yt[..., None])
    flux = profile_flux(lam, s, yn[..., None])
    phi = basis.eigenfunctions(x)
    dphi = basis.eigenfunction_derivatives(x)
    return dict(wx=wx, wt=wt, wn=wn, psi=psi, flux=flux, phi=phi, dphi=dphi)


def _half_disk_energy(tab, coeffs):
    gx = np.einsum("jk,jik->ji", tab["dphi"] * coeffs, tab["psi"])
    gy = np.einsum("jk,jik->ji", tab["phi"] * coeffs, tab["flux"])
    per_x = np.sum(tab["wt"] * gx ** 2, axis=1) + np.sum(tab["wn"] * gy ** 2, axis=1)
    return float(np.dot(tab["wx"], per_x))


def local_energy_check(traj, r, Phi, s, C=10.0, n_x=48, n_y=16, levels=6):
    r"""Compare the half-disk energy of ``E_R(Phi(u))`` with its a-priori bound.

    LHS: ``int_0^T int_{Omega_r} |grad E_R(Phi(u))|^2 y^{1-2s}`` with a
    right-endpoint rule in time (the rule under which the implicit scheme
    dissipates energy exactly).  RHS: ``(2/mu_s) int_{B_{2r}} Psi(u0) + C
    ||Phi(u0)||_inf^2 int_{Omega_{2r}} y^{1-2s}``.
    """
    s = FracOrder(s)
    basis = traj.basis
    if not 0.25 < r < basis.R / 2:
        raise ValueError(f"window radius must lie in (1/4, R/2) = (0.25, {basis.R / 2:g})")
    tab = _half_disk_tables(basis, s, r, n_x, n_y, levels)
    dt = np.diff(traj.times)
    g = traj.boundary_level
    phi_g = float(Phi(np.array([g]))[0])
    lhs = 0.0
    for tau, f in zip(dt, traj.fields[1:]):
        c = basis.analyze(Phi(f.values) - phi_g)
        lhs += tau * _half_disk_energy(tab, c)
    mu = constants(1, s).mu_s
    u0 = traj.fields[0].values
    x = basis.nodes
    inside = np.abs(x) < 2 * r
    psi_mass = float(np.sum(basis.weights[inside] * Phi.potential(u0[inside])))
    sup_phi = float(np.max(np.abs(Phi(u0))))
    rho = 2 * r
    weight_mass = rho ** (3 - 2 * s) / (2 - 2 * s) * beta_fn(0.5, 2 - s)
    rhs = 2 / mu * psi_mass + C * sup_phi ** 2 * weight_mass
    return {"lhs": lhs, "rhs": rhs, "holds": bool(lhs <= rhs), "C": C,
            "C_needed": max(0.0, (lhs - 2 / mu * psi_mass) / (sup_phi ** 2 * weight_mass)) if sup_phi > 0 else 0.0}


def weak_form_residual(traj, Phi, s, chi, theta=None, dtheta=None, operator=None):
    """Residual of the weak formulation against ``psi(x, t) = theta(t) chi(x)``.

    ``int int u psi_t - int int (-Delta)^{s/2} Phi(u) (-Delta)^{s/2} psi
    - int u(T) psi(T) + int u0 psi(0)``.  In time, ``u`` is frozen at the left
    end of each step in the first term and ``theta`` at the right end in the
    second; with that pairing the implicit scheme satisfies the identity
    exactly (summation by parts), so the residual measures solver error only.
    """
    s = FracOrder(s)
    theta = theta or (lambda t: 1.0 + t)
    dtheta = dtheta or (lambda t: 1.0)
    operator = operator or traj.meta.get("operator", "spectral")
    basis = traj.basis
    sym = basis.symbol(s, operator)
    g = traj.boundary_level
    phi_g = float(Phi(np.array([g]))[0])
    t = traj.times
    total = 0.0
    for j in range(1, t.size):
        dt = t[j] - t[j - 1]
        total += (theta(t[j]) - theta(t[j - 1])) * float(np.dot(traj.fields[j - 1].coeffs, chi.coeffs))
        pc = basis.analyze(Phi(traj.fields[j].values) - phi_g)
        total -= dt * theta(t[j]) * float(np.dot(sym * pc, chi.coeffs))
    total -= theta(t[-1]) * float(np.dot(traj.final.coeffs, chi.coeffs))
    total += theta(t[0]) * float(np.dot(traj.fields[0].coeffs, chi.coeffs))
    return abs(total)
