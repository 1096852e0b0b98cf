r"""Backward problems for the duality argument.

Given two solutions ``u, w`` the coefficient ``a = (Phi(u) - Phi(w)) / (u - w)``
(0 where ``u = w``) is smoothed in space, lifted by ``1/k`` and averaged in
time over a partition into ``n`` intervals.  The backward problem

    psi_t = beta (-Delta)^s_R psi,   psi(T) = chi

is solved in reversed time ``sigma = T - t`` by implicit Euler.  Each step
solves ``(beta^{-1} + d sigma S) psi_new = beta^{-1} psi_old``, a symmetric
positive definite system, by Jacobi-preconditioned conjugate gradients.  On
intervals where ``beta`` is spatially constant the exact exponential is used
instead.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from .basis import Field
from .evolve import Trajectory
from .specfun import FracOrder

__all__ = [
    "BackwardCoefficient",
    "build_coefficient",
    "smooth_coefficient",
    "backward_solve",
    "energy_identity_check",
    "uniqueness_witness",
    "resample",
]


@dataclass(frozen=True, eq=False)
class BackwardCoefficient:
    """Coefficient ``a`` on the space-time grid and its approximants.

    ``a[j]`` is the value on the time step ``(times[j-1], times[j]]`` (the
    implicit scheme freezes everything at the right end), so ``a[0]`` is
    unused.  ``a_k`` has the same layout; ``a_nk[i]`` lives on
    ``[partition[i], partition[i+1]]``.
    """

    basis: object
    times: np.ndarray
    a: np.ndarray = field(repr=False)
    lipschitz: float = math.inf
    k: float = None
    n: int = None
    a_k: np.ndarray = field(default=None, repr=False)
    partition: np.ndarray = None
    a_nk: np.ndarray = field(default=None, repr=False)
    report: dict = field(default_factory=dict)

    @property
    def T(self):
        return float(self.times[-1] - self.times[0])


def _check_pair(u, w):
    if u.basis is not w.basis:
        raise ValueError("trajectories live on different grids")
    if u.times.shape != w.times.shape or np.max(np.abs(u.times - w.times)) > 1e-12 * max(1.0, u.times[-1]):
        raise ValueError("trajectories have different time grids; resample first")


def resample(w, times):
    """Piecewise-constant selection of snapshots of ``w`` at ``times``.

    The snapshot taken for ``t`` is the first stored time ``>= t``, matching
    the right-endpoint convention of implicit stepping.
    """
    tol = 1e-12 * max(1.0, float(w.times[-1]))
    idx = np.searchsorted(w.times, np.asarray(times) - tol, side="left")
    if np.any(idx >= w.times.size):
        raise ValueError("requested times exceed the trajectory span")
    fields = tuple(w.fields[i] for i in idx)
    return Trajectory(np.asarray(times, float), fields, (), w.boundary_level, dict(w.meta))


def build_coefficient(u, w, Phi):
    """``a = (Phi(u) - Phi(w)) / (u - w)`` where ``u != w``, else 0.

    Values are clipped to ``[0, L]`` with ``L`` the Lipschitz bound of ``Phi``
    on the joint range; clipping only removes rounding noise where ``u`` and
    ``w`` nearly coincide.
    """
    _check_pair(u, w)
    U = u.values
    W = w.values
    lo = float(min(U.min(), W.min()))
    hi = float(max(U.max(), W.max()))
    L = Phi.lipschitz_on(lo, hi)
    diff = U - W
    num = Phi(U) - Phi(W)
    a = np.zeros_like(U)
    nz = diff != 0
    a[nz] = num[nz] / diff[nz]
    a = np.clip(a, 0.0, L)
    return BackwardCoefficient(basis=u.basis, times=u.times.copy(), a=a, lipschitz=L)


def _mollify(values, h, width):
    # normalised discrete Gaussian, truncated at 4 widths, along the last axis
    m = int(math.floor(4 * width / h))
    if m == 0:
        return values.copy()
    offs = np.arange(-m, m + 1)
    ker = np.exp(-0.5 * (offs * h / width) ** 2)
    n = values.shape[-1]
    num = np.zeros_like(values)
    den = np.zeros(n)
    for o, kv in zip(offs, ker):
        lo, hi = max(0, -o), min(n, n - o)
        num[..., lo:hi] += kv * values[..., lo + o:hi + o]
        den[lo:hi] += kv
    return num / den


def _time_average(times, vals, partition):
    # vals[j] holds on (times[j-1], times[j]]; average over each partition cell
    out = np.zeros((partition.size - 1, vals.shape[1]))
    for i, (p0, p1) in enumerate(zip(partition[:-1], partition[1:])):
        lo = np.maximum(times[:-1], p0)
        hi = np.minimum(times[1:], p1)
        ov = np.clip(hi - lo, 0.0, None)
        out[i] = ov @ vals[1:] / (p1 - p0)
    return out


def _st_norm(basis, times, vals):
    # L2 norm over B_R x (0, T) of a right-endpoint piecewise-constant field
    dt = np.diff(times)
    return float(np.sqrt(np.sum(dt[:, None] * basis.weights * vals[1:] ** 2)))


def smooth_coefficient(coef, k, n):
    """Return a copy of ``coef`` with ``a_k`` and ``a_nk`` filled in.

    ``report`` contains ``gap_k = ||(a_k - a)/sqrt(a_k)||`` and ``gap_nk =
    ||(a - a_nk)/sqrt(a_nk)||`` in ``L^2(B_R x (0,T))``, plus the extreme
    values of ``a_nk``.
    """
    if not k >= 1 or int(n) != n or n < 1:
        raise ValueError("need k >= 1 and an integer n >= 1")
    n = int(n)
    basis = coef.basis
    a_k = _mollify(coef.a, basis.h, 1.0 / k) + 1.0 / k
    t = coef.times
    partition = t[0] + (t[-1] - t[0]) * np.arange(n + 1) / n
    a_nk = _time_average(t, a_k, partition)
    # a_nk expanded onto the step layout of a
    mids = 0.5 * (t[:-1] + t[1:])
    cell = np.clip(np.searchsorted(partition, mids, side="right") - 1, 0, n - 1)
    a_nk_steps = np.vstack([a_nk[:1], a_nk[cell]])
    report = {
        "gap_k": _st_norm(basis, t, (a_k - coef.a) / np.sqrt(a_k)),
        "gap_nk": _st_norm(basis, t, (coef.a - a_nk_steps) / np.sqrt(a_nk_steps)),
        "gap_n": _st_norm(basis, t, a_k - a_nk_steps),
        "a_nk_min": float(a_nk.min()),
        "a_nk_max": float(a_nk.max()),
        "lower_bound": 1.0 / (2 * k),
        "upper_bound": 2.0 / k + float(np.max(coef.a)),
    }
    return BackwardCoefficient(basis=basis, times=t, a=coef.a, lipschitz=coef.lipschitz, k=float(k), n=n,
                               a_k=a_k, partition=partition, a_nk=a_nk, report=report)


def _resolve_beta(beta, basis, T):
    """Return ``(partition, values)`` with ``values[i]`` the field on cell ``i``."""
    if isinstance(beta, BackwardCoefficient):
        if beta.a_nk is None:
            raise ValueError("coefficient has not been smoothed; call smooth_coefficient")
        if abs(beta.T - T) > 1e-12 * max(1.0, T):
            raise ValueError("horizon does not match the coefficient")
        return beta.partition - beta.partition[0], beta.a_nk
    arr = np.asarray(beta, dtype=float)
    if arr.ndim == 0:
        arr = np.full((1, basis.N), float(arr))
    elif arr.ndim == 1:
        arr = arr[None, :]
    if arr.shape[1] != basis.N:
        raise ValueError("coefficient size does not match the basis")
    n = arr.shape[0]
    return T * np.arange(n + 1) / n, arr


def _s_diagonal(basis, sym):
    phi = basis.eigenfunctions(basis.nodes)
    return basis.h * (phi ** 2) @ sym


def backward_solve(beta, chi, T, s, inner_steps=1024, operator="discrete", exact_constant=True, cg_tol=1e-13):
    """Solve ``psi_t = beta (-Delta)^s_R psi`` backward from ``psi(T) = chi``.

    ``beta`` is a smoothed :class:`BackwardCoefficient`, an array of fields
    (one per equal cell of ``[0, T]``) or a positive constant.
    ``inner_steps`` is the total number of implicit steps; it must be a
    multiple of the number of cells.  Returns a :class:`Trajectory` in
    increasing ``t`` whose last snapshot is ``chi``.
    """
    s = FracOrder(s)
    basis = chi.basis
    partition, vals = _resolve_beta(beta, basis, T)
    n_cells = vals.shape[0]
    if inner_steps % n_cells:
        raise ValueError(f"inner_steps ({inner_steps}) must be a multiple of the number of cells ({n_cells})")
    if np.any(vals <= 0):
        raise ValueError("backward coefficient must be positive")
    m = inner_steps // n_cells
    sym = basis.symbol(s, operator)
    S = lambda v: basis.synthesize(sym * basis.analyze(v))
    diagS = _s_diagonal(basis, sym)
    psi = chi.values.copy()
    out_t = [T]
    out = [chi]
    cg_total = 0
    for cell in range(n_cells - 1, -1, -1):
        b = vals[cell]
        dsig = (partition[cell + 1] - partition[cell]) / m
        const = exact_constant and np.ptp(b) <= 1e-14 * np.max(b)
        if not const:
            binv = 1.0 / b
            A = LinearOperator((basis.N, basis.N), matvec=lambda v: binv * v + dsig * S(v), dtype=float)
            M = LinearOperator((basis.N, basis.N), matvec=lambda v: v / (binv + dsig * diagS), dtype=float)
        for j in range(m):
            if const:
                c = basis.analyze(psi) * np.exp(-b[0] * sym * dsig)
                psi = basis.synthesize(c)
            else:
                counter = [0]
                psi, info = cg(A, binv * psi, x0=psi, rtol=cg_tol, atol=0.0, M=M, maxiter=20 * basis.N,
                               callback=lambda _: counter.__setitem__(0, counter[0] + 1))
                if info != 0:
                    raise RuntimeError(f"inner CG solve failed (info={info})")
                cg_total += counter[0]
            out_t.append(partition[cell] + (m - j - 1) * dsig)
            out.append(Field.from_values(basis, psi))
    times = np.array(out_t[::-1])
    times[0] = 0.0
    meta = {"operator": operator, "inner_steps": inner_steps, "cells": n_cells, "cg_iterations": cg_total,
            "s": float(s)}
    return Trajectory(times, tuple(out[::-1]), (), 0.0, meta)


def energy_identity_check(psi, beta, chi, s):
    r"""Relative residual of the backward energy identity.

    ``int_0^T int beta [(-Delta)^s psi]^2 + 1/2 ||(-Delta)^{s/2} psi(0)||^2
    = 1/2 ||(-Delta)^{s/2} chi||^2``.  The time integral uses, on each step,
    the value at the end reached by the implicit step (the earlier time).
    """
    s = FracOrder(s)
    basis = chi.basis
    T = float(psi.times[-1])
    operator = psi.meta.get("operator", "discrete")
    sym = basis.symbol(s, operator)
    partition, vals = _resolve_beta(beta, basis, T)
    t = psi.times
    lhs = 0.0
    for j in range(1, t.size):
        mid = 0.5 * (t[j - 1] + t[j])
        cell = int(np.clip(np.searchsorted(partition, mid, side="right") - 1, 0, vals.shape[0] - 1))
        lap = basis.synthesize(sym * psi.fields[j - 1].coeffs)
        lhs += (t[j] - t[j - 1]) * float(np.sum(basis.weights * vals[cell] * lap ** 2))
    lhs += 0.5 * float(np.sum(sym * psi.fields[0].coeffs ** 2))
    rhs = 0.5 * float(np.sum(sym * chi.coeffs ** 2))
    if rhs == 0:
        return {"lhs": float(lhs), "rhs": 0.0, "residual": float(abs(lhs))}
    return {"lhs": float(lhs), "rhs": rhs, "residual": float(abs(lhs - rhs) / rhs)}


def uniqueness_witness(u, w, chi, k, n, Phi, s, operator="discrete"):
    """Witness ``int (u(T) - w(T)) chi`` and its duality bound.

    ``w`` is resampled onto the times of ``u``.  The bound is
    ``(||u||_inf + ||w||_inf) ||(a - a_nk)/sqrt(a_nk)||_{L^2} C_R`` with
    ``C_R = (||(-Delta)^{s/2} chi||^2 / 2)^{1/2}``.
    """
    s = FracOrder(s)
    if u.basis is not w.basis or chi.basis is not u.basis:
        raise ValueError("trajectories and test function must share a basis")
    if abs(u.times[-1] - w.times[-1]) > 1e-12 * max(1.0, u.times[-1]):
        raise ValueError("trajectories must end at the same time")
    if np.any(u.fields[0].values != w.fields[0].values):
        raise ValueError("trajectories must start from the same datum")
    w_on_u = resample(w, u.times)
    witness = float(np.sum(u.basis.weights * (u.final.values - w_on_u.final.values) * chi.values))
    coef = smooth_coefficient(build_coefficient(u, w_on_u, Phi), k, n)
    sym = u.basis.symbol(s, operator)
    C_R = math.sqrt(0.5 * float(np.sum(sym * chi.coeffs ** 2)))
    sup = float(np.max(np.abs(u.values))) + float(np.max(np.abs(w.values)))
    bound = sup * coef.report["gap_nk"] * C_R
    return {"witness": witness, "bound": bound, "gap_nk": coef.report["gap_nk"], "C_R": C_R, "coefficient": coef}
