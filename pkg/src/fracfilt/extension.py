r"""Extension operators on the cylinder ``B_R x (0, inf)`` and the half-plane.

Cylinder extension
    ``E_R(f)(x, y) = sum_k fhat_k phi_k(x) psi_k(y)`` with the Bessel profile
    ``psi_k(y) = c_s (sqrt(lambda_k) y)^s K_s(sqrt(lambda_k) y)``.

Half-plane extension (``d = 1``)
    Convolution with ``P_s(x, y) = kappa y^{2s} |(x, y)|^{-1-2s}``.  Data are
    taken piecewise linear between samples and convolved exactly, using the
    closed-form primitive of the kernel (a regularised incomplete beta
    function) and of its first moment.  This keeps the convolution accurate
    for arbitrarily small ``y``.

The weighted energy integrals split the weight: tangential terms are
integrated against ``y^{1-2s}``, while the normal term is written as the
square of the bounded flux ``y^{1-2s} d_y E`` against ``y^{2s-1}``.  Both
rules are Gauss-Jacobi on ``[0, split]`` plus a Gauss-Laguerre tail.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import betainc, roots_jacobi, roots_laguerre, roots_legendre

from .basis import Field
from .specfun import FracOrder, bessel_k, constants

__all__ = [
    "TruncationWarning",
    "EnergyWeight",
    "YRule",
    "ExtensionField",
    "profile_psi",
    "profile_flux",
    "extend_cylinder",
    "extension_gradient",
    "dtn_flux",
    "weighted_energy",
    "poisson_kernel",
    "poisson_kernel_mass",
    "poisson_extend",
    "poisson_extend_gradient",
    "check_energy_pairing_identity",
    "graded_rule",
]


class TruncationWarning(UserWarning):
    """A truncated integral may have lost a non-negligible tail."""


def _z(lam, y):
    return np.sqrt(np.asarray(lam, dtype=float)) * np.asarray(y, dtype=float)


def profile_psi(lam, s, y):
    """Bessel profile ``psi(y) = c_s z^s K_s(z)``, ``z = sqrt(lam) y``.

    ``lam`` and ``y`` broadcast against each other; ``psi(0) = 1``.
    """
    s = FracOrder(s)
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise ValueError("profile height must be non-negative")
    z = _z(lam, y)
    out = np.ones(z.shape)
    pos = z > 0
    if pos.any():
        zp = z[pos]
        out[pos] = (2 ** (1 - s) / math.gamma(s)) * zp ** s * bessel_k(s, zp)
    return out if out.ndim else float(out)


def profile_flux(lam, s, y):
    r"""Weighted derivative ``y^{1-2s} psi'(y) = -c_s lam^s z^{1-s} K_{1-s}(z)``.

    Bounded down to ``y = 0`` where it equals ``-lam^s / mu_s``.
    """
    s = FracOrder(s)
    lam = np.asarray(lam, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise ValueError("profile height must be non-negative")
    z = _z(lam, y)
    c_s = 2 ** (1 - s) / math.gamma(s)
    g = np.full(z.shape, 2 ** (-s) * math.gamma(1 - s))
    pos = z > 0
    if pos.any():
        zp = z[pos]
        g[pos] = zp ** (1 - s) * bessel_k(1 - s, zp)
    out = -c_s * np.broadcast_to(lam, z.shape) ** s * g
    return out if out.ndim else float(out)


def profile_dpsi(lam, s, y):
    """Plain derivative ``psi'(y)``; singular like ``y^{2s-1}`` at the origin."""
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise ValueError("psi' is evaluated only for y > 0")
    return profile_flux(lam, s, y) * y ** (2 * float(s) - 1)


@dataclass(frozen=True)
class EnergyWeight:
    r"""Decaying weight ``rho_alpha``: equal to 1 on ``[0, 1]``, ``~ e^{-alpha y}`` beyond.

    ``rho = exp(-alpha q(y))`` with ``q = 0`` on ``[0,1]``, ``(y-1)^2/2`` on
    ``[1,2]`` and ``y - 3/2`` after, so ``rho`` is C^1 and ``|rho'| <= alpha rho``.
    """

    alpha: float

    def _q(self, y):
        y = np.asarray(y, dtype=float)
        return np.where(y <= 1, 0.0, np.where(y <= 2, 0.5 * (y - 1) ** 2, y - 1.5))

    def __call__(self, y):
        return np.exp(-self.alpha * self._q(y))

    def derivative(self, y):
        y = np.asarray(y, dtype=float)
        dq = np.clip(y - 1.0, 0.0, 1.0)
        return -self.alpha * dq * self(y)

    @property
    def envelope(self):
        """Constants ``(c, C)`` with ``c e^{-alpha y} <= rho <= C e^{-alpha y}`` for ``y >= 1``."""
        return math.exp(self.alpha), math.exp(1.5 * self.alpha)


def _gauss_jacobi(n, beta, a, b):
    # nodes/weights for int_a^b g(y) (y - a)^beta dy
    x, w = roots_jacobi(n, 0.0, beta)
    half = 0.5 * (b - a)
    return a + half * (1.0 + x), w * half ** (beta + 1.0)


def _gauss_legendre(n, a, b):
    x, w = roots_legendre(n)
    half = 0.5 * (b - a)
    return a + half * (1.0 + x), w * half


def graded_rule(Y, beta, n=16, levels=6, ratio=0.25):
    """Composite rule for ``int_0^Y g(y) y^beta dy`` with geometric grading at 0.

    The first panel ``[0, Y ratio^levels]`` uses Gauss-Jacobi with the exact
    weight; the remaining panels use Gauss-Legendre on ``g(y) y^beta``.
    Returned weights already include ``y^beta``.
    """
    Y = np.asarray(Y, dtype=float)
    edges = [Y * ratio ** j for j in range(levels, -1, -1)]
    ny, wy = _gauss_jacobi(n, beta, 0.0, 1.0)
    nodes = [np.multiply.outer(edges[0], ny)]
    weights = [np.multiply.outer(edges[0] ** (beta + 1.0), wy)]
    xl, wl = roots_legendre(n)
    for a, b in zip(edges[:-1], edges[1:]):
        half = 0.5 * (b - a)
        pts = np.multiply.outer(a, np.ones(n)) + np.multiply.outer(half, 1.0 + xl)
        nodes.append(pts)
        weights.append(np.multiply.outer(half, wl) * pts ** beta)
    return np.concatenate(nodes, axis=-1), np.concatenate(weights, axis=-1)


@dataclass(frozen=True, eq=False)
class YRule:
    """Quadrature in the extension variable ``y`` adapted to ``y^{1-2s}``.

    ``tangential``: nodes/weights for ``int_0^split g y^{1-2s}``;
    ``normal``: nodes/weights for ``int_0^split g y^{2s-1}``;
    ``tail``: nodes/weights for ``int_split^inf g`` (Gauss-Laguerre scaled to
    the decay ``rate``).
    """

    s: float
    split: float
    tangential: tuple
    normal: tuple
    tail: tuple
    rate: float

    @classmethod
    def gauss_jacobi(cls, s, n=64, split=1.0, rate=1.0, n_tail=32):
        s = FracOrder(s)
        tan = _gauss_jacobi(n, 1 - 2 * s, 0.0, split)
        nor = _gauss_jacobi(n, 2 * s - 1, 0.0, split)
        return cls(s, split, tan, nor, _laguerre_tail(n_tail, split, rate), rate)

    @classmethod
    def graded(cls, s, n=16, levels=8, split=1.0, rate=1.0, n_tail=32):
        s = FracOrder(s)
        tan = graded_rule(split, 1 - 2 * s, n, levels)
        nor = graded_rule(split, 2 * s - 1, n, levels)
        return cls(s, split, tan, nor, _laguerre_tail(n_tail, split, rate), rate)

    @property
    def nodes(self):
        return np.unique(np.concatenate([self.tangential[0], self.normal[0], self.tail[0]]))


def _laguerre_tail(n, split, rate):
    t, w = roots_laguerre(n)
    return split + t / rate, w * np.exp(t) / rate


@dataclass(frozen=True, eq=False)
class ExtensionField:
    """Cylinder extension sampled on the basis nodes and a ``y`` grid.

    ``values[i, j] = E_R(f)(x_j, y_i)``.  The source coefficients and ``s``
    travel with the samples so that gradients stay analytic and fields with
    different orders cannot be mixed silently.
    """

    source: Field
    s: float
    y: np.ndarray
    values: np.ndarray = field(repr=False)
    rule: YRule = None

    @property
    def x(self):
        return self.source.basis.nodes

    def trace_error(self):
        """L2 distance between the lowest sampled row and the datum."""
        i = int(np.argmin(self.y))
        diff = self.values[i] - self.source.values
        return float(np.sqrt(np.sum(self.source.basis.weights * diff ** 2)))


def extend_cylinder(f, s, y=None):
    """Sample ``E_R(f)`` on the basis nodes for every height in ``y``.

    ``y`` may be an array of heights, a :class:`YRule` (its nodes are used and
    the rule is kept for :func:`weighted_energy`), or ``None`` for a default
    log-spaced grid on ``[1e-6, 10]``.
    """
    s = FracOrder(s)
    rule = None
    if y is None:
        y = np.logspace(-6, 1, 71)
    elif isinstance(y, YRule):
        if not math.isclose(y.s, s):
            raise ValueError("y-rule was built for a different order s")
        rule = y
        y = y.nodes
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if np.any(y < 0):
        raise ValueError("heights must be non-negative")
    psi = profile_psi(f.basis.lambdas[None, :], s, y[:, None])
    values = f.basis.synthesize(psi * f.coeffs[None, :])
    return ExtensionField(source=f, s=float(s), y=y, values=values, rule=rule)


def extension_gradient(f, s, x, y):
    """Gradient ``(d_x E_R f, y^{1-2s} d_y E_R f)`` at paired points ``(x, y)``.

    The second component is the weighted normal derivative, which is bounded
    at ``y = 0``.  ``x`` and ``y`` broadcast together.
    """
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    lam = f.basis.lambdas
    # profiles depend on y only, eigenfunctions on x only
    yu, yi = np.unique(y, return_inverse=True)
    xu, xi = np.unique(x, return_inverse=True)
    psi = profile_psi(lam, s, yu[:, None]) * f.coeffs
    flux = profile_flux(lam, s, yu[:, None]) * f.coeffs
    phi = f.basis.eigenfunctions(xu)
    dphi = f.basis.eigenfunction_derivatives(xu)
    yi = yi.reshape(y.shape)
    xi = xi.reshape(x.shape)
    gx = np.einsum("...k,...k->...", dphi[xi], psi[yi])
    gy = np.einsum("...k,...k->...", phi[xi], flux[yi])
    return gx, gy


def dtn_flux(f, s, y):
    """Dirichlet-to-Neumann approximation ``-mu_s y^{1-2s} d_y E_R(f)(., y)``."""
    s = FracOrder(s)
    if not y > 0:
        raise ValueError("flux height must be positive")
    mu = constants(1, s).mu_s
    return Field.from_coeffs(f.basis, -mu * profile_flux(f.basis.lambdas, s, y) * f.coeffs)


def weighted_energy(u, rule=None, weight=None, tol=1e-10):
    r"""``sqrt(mu_s int int |grad E|^2 y^{1-2s} dx dy)`` over the cylinder.

    The ``x`` integral is exact (orthogonality of ``phi_k`` and ``phi_k'``);
    the ``y`` integral uses ``rule`` (default: the field's own rule, else a
    64-node Gauss-Jacobi rule).  ``weight`` is an optional extra factor
    ``rho(y)`` such as :class:`EnergyWeight`.
    """
    if isinstance(u, Field):
        raise TypeError("weighted_energy expects an ExtensionField; call extend_cylinder first")
    s = u.s
    basis = u.source.basis
    lam = basis.lambdas
    if rule is None:
        rule = u.rule
    if rule is None:
        rule = YRule.gauss_jacobi(s, 64, rate=2.0 * math.sqrt(lam[0]))
    if not math.isclose(rule.s, s):
        raise ValueError("y-rule was built for a different order s")
    rho = (lambda y: 1.0) if weight is None else weight
    yt, wt = rule.tangential
    yn, wn = rule.normal
    ytl, wtl = rule.tail
    psi_t = profile_psi(lam[:, None], s, yt[None, :])
    fl_n = profile_flux(lam[:, None], s, yn[None, :])
    psi_tl = profile_psi(lam[:, None], s, ytl[None, :])
    fl_tl = profile_flux(lam[:, None], s, ytl[None, :])
    inner = (lam[:, None] * psi_t ** 2 * rho(yt)) @ wt + (fl_n ** 2 * rho(yn)) @ wn
    tail_integrand = (lam[:, None] * psi_tl ** 2 * ytl ** (1 - 2 * s)
                      + fl_tl ** 2 * ytl ** (2 * s - 1)) * rho(ytl)
    tail = tail_integrand @ wtl
    per_mode = inner + tail
    mu = constants(1, s).mu_s
    total = mu * float(np.dot(u.source.coeffs ** 2, per_mode))
    last = mu * float(np.dot(u.source.coeffs ** 2, tail_integrand[:, -1] * wtl[-1]))
    if total > 0 and abs(last) > tol * total:
        warnings.warn(f"y-tail of the energy not resolved (last node carries {last / total:.2e})",
                      TruncationWarning, stacklevel=2)
    return math.sqrt(max(total, 0.0))


# ---------------------------------------------------------------------------
# half-plane Poisson extension, d = 1


def poisson_kernel(x, y, s, d=1):
    """``P_s(x, y) = kappa_{d,s} y^{2s} |(x, y)|^{-d-2s}`` for ``d = 1``."""
    if d != 1:
        raise NotImplementedError("the Poisson extension is implemented for d = 1")
    s = FracOrder(s)
    kappa = constants(1, s).kappa_ds
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    return kappa * y ** (2 * s) * (x * x + y * y) ** (-(1 + 2 * s) / 2)


def poisson_kernel_mass(y, s, d=1):
    """``int P_s(x, y) dx`` by adaptive quadrature (equal to 1 up to quadrature error)."""
    from scipy import integrate

    f = lambda x: float(poisson_kernel(x, y, s, d))
    left, _ = integrate.quad(f, -np.inf, 0.0, epsabs=0.0, epsrel=1e-13, limit=400)
    right, _ = integrate.quad(f, 0.0, np.inf, epsabs=0.0, epsrel=1e-13, limit=400)
    return left + right


class _Kernel1D:
    """Closed-form primitives of the 1D Poisson kernel and of its moment."""

    def __init__(self, s):
        self.s = float(FracOrder(s))
        self.kappa = constants(1, s).kappa_ds

    def cdf(self, t, y):
        # int_{-inf}^t P(tau, y) d tau, evaluated tail-stably
        tail = 0.5 * betainc(self.s, 0.5, y * y / (t * t + y * y))
        return np.where(t < 0, tail, 1.0 - tail)

    def moment(self, t, y):
        s = self.s
        r2 = t * t + y * y
        if abs(s - 0.5) < 1e-14:
            return self.kappa * y * 0.5 * np.log(r2)
        return self.kappa * y ** (2 * s) * r2 ** ((1 - 2 * s) / 2) / (1 - 2 * s)

    def density(self, t, y):
        return self.kappa * y ** (2 * self.s) * (t * t + y * y) ** (-(1 + 2 * self.s) / 2)

    def cdf_flux(self, t, y):
        # y^{1-2s} d/dy cdf
        return -self.kappa * t * (t * t + y * y) ** (-(1 + 2 * self.s) / 2)

    def moment_flux(self, t, y):
        s = self.s
        r2 = t * t + y * y
        if abs(s - 0.5) < 1e-14:
            return self.kappa * (0.5 * np.log(r2) + y * y / r2)
        return self.kappa * (2 * s * r2 ** ((1 - 2 * s) / 2) / (1 - 2 * s)
                             + y * y * r2 ** (-(1 + 2 * s) / 2))


def _segments(xs, vs):
    xs = np.asarray(xs, float)
    vs = np.asarray(vs, float)
    if xs.ndim != 1 or xs.shape != vs.shape or xs.size < 2:
        raise ValueError("samples must be two 1D arrays of equal length >= 2")
    if np.any(np.diff(xs) <= 0):
        raise ValueError("sample abscissae must be strictly increasing")
    return xs, vs, np.diff(vs) / np.diff(xs)


def poisson_extend(xs, vs, s, x, y, far_value=0.0, tol=1e-8, d=1):
    """Half-plane extension ``E(v)(x, y)`` of sampled data.

    ``v`` is the piecewise-linear interpolant of ``(xs, vs)`` inside the
    window and the constant ``far_value`` outside it.  The convolution is
    exact for that function.  A :class:`TruncationWarning` is raised when the
    window edge values differ from ``far_value`` by more than ``tol`` (the
    datum is then discontinuous at the window edge).

    ``x`` and ``y`` broadcast together.
    """
    if d != 1:
        raise NotImplementedError("the Poisson extension is implemented for d = 1")
    xs, vs, slopes = _segments(xs, vs)
    if max(abs(vs[0] - far_value), abs(vs[-1] - far_value)) > tol:
        warnings.warn("datum does not match the far-field value at the window edge",
                      TruncationWarning, stacklevel=2)
    k = _Kernel1D(s)
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    if np.any(y <= 0):
        raise ValueError("extension heights must be positive")
    t = x[..., None] - xs
    yy = y[..., None]
    H = k.cdf(t, yy)
    M = k.moment(t, yy)
    lin = (vs[:-1] + slopes * (x[..., None] - xs[:-1])) * (H[..., :-1] - H[..., 1:])
    mom = slopes * (M[..., :-1] - M[..., 1:])
    far = far_value * (H[..., -1] + 1.0 - H[..., 0])
    return np.sum(lin - mom, axis=-1) + far


def poisson_extend_gradient(xs, vs, s, x, y, far_value=0.0):
    """``(d_x E(v), y^{1-2s} d_y E(v))`` for the same data model as :func:`poisson_extend`."""
    xs, vs, slopes = _segments(xs, vs)
    k = _Kernel1D(s)
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    t = x[..., None] - xs
    yy = y[..., None]
    H = k.cdf(t, yy)
    gx = np.sum(slopes * (H[..., :-1] - H[..., 1:]), axis=-1)
    # jumps of the datum at the window edges
    gx += (vs[0] - far_value) * k.density(t[..., 0], y) - (vs[-1] - far_value) * k.density(t[..., -1], y)
    Hf = k.cdf_flux(t, yy)
    Mf = k.moment_flux(t, yy)
    lin = (vs[:-1] + slopes * (x[..., None] - xs[:-1])) * (Hf[..., :-1] - Hf[..., 1:])
    mom = slopes * (Mf[..., :-1] - Mf[..., 1:])
    far = far_value * (Hf[..., -1] - Hf[..., 0])
    gy = np.sum(lin - mom, axis=-1) + far
    return gx, gy


def check_energy_pairing_identity(v, phi, s, n_samples=64, n_x=6, n_outer=24, n_y=16, levels=8, n_lhs=128, lhs=None):
    r"""Residual of ``int v (-Delta)^s phi = mu_s int_{C_R} <grad E(v), grad E_R(phi)> y^{1-2s}``.

    Parameters
    ----------
    v : SmoothFunction
        Compactly supported datum on the line (see :mod:`fracfilt.singular`);
        it is sampled at ``n_samples + 1`` equispaced points of its support
        for the half-plane extension.
    phi : Field
        Function on ``B_R``.
    n_x, n_outer : int
        Gauss-Legendre nodes per sampling interval of ``v`` and per outer
        x panel (between the support of ``v`` and the cylinder wall).
    n_y, levels : int
        Nodes per y panel and number of graded y panels.
    n_lhs : int
        Gauss-Legendre nodes for the left-hand side.
    lhs : float, optional
        Precomputed left-hand side, reused across refinement studies of
        the right-hand side.

    Returns
    -------
    dict
        ``lhs``, ``rhs`` and ``residual = |lhs - rhs|``.
    """
    from .singular import SmoothFunction, frac_lap_pv

    s = FracOrder(s)
    basis = phi.basis
    R = basis.R
    if v.support is None:
        raise ValueError("v must be compactly supported")
    a, b = v.support
    if a < -R or b > R:
        raise ValueError("support of v must lie inside B_R")

    # left-hand side: int v (-Delta)^s phi over supp v
    if lhs is None:
        phi_fn = SmoothFunction.from_field(phi)
        xg, wg = _gauss_legendre(n_lhs, a, b)
        lap = np.array([frac_lap_pv(phi_fn, s, xi) for xi in xg])
        lhs = float(np.sum(wg * v.f(xg) * lap))
    if np.all(v.f(np.linspace(a, b, 257)) == 0) or np.all(phi.coeffs == 0):
        return {"lhs": lhs, "rhs": 0.0, "residual": abs(lhs)}

    # right-hand side on the cylinder
    xs = np.linspace(a, b, n_samples + 1)
    vs = v.f(xs)
    vs[0] = vs[-1] = 0.0
    # panels break at every sample: the flux of the interpolant is singular there for s > 1/2
    panels = np.unique(np.concatenate([[-R, R], xs]))
    xq, wq = [], []
    for lo, hi in zip(panels[:-1], panels[1:]):
        inside = a <= lo and hi <= b
        p, w = _gauss_legendre(n_x if inside else n_outer, lo, hi)
        xq.append(p)
        wq.append(w)
    xq = np.concatenate(xq)
    wq = np.concatenate(wq)
    rate = math.sqrt(basis.lambdas[0])
    rule = YRule.graded(s, n=n_y, levels=levels, split=1.0, rate=rate, n_tail=32)

    mu = constants(1, s).mu_s
    total = 0.0
    for (yn, wn), kind in ((rule.tangential, "t"), (rule.normal, "n"), (rule.tail, "tail")):
        X = xq[None, :]
        Y = yn[:, None]
        gxv, gyv = poisson_extend_gradient(xs, vs, s, X, Y)
        gxr, gyr = extension_gradient(phi, s, X, Y)
        if kind == "t":
            integrand = gxv * gxr
        elif kind == "n":
            integrand = gyv * gyr
        else:
            integrand = gxv * gxr * Y ** (1 - 2 * s) + gyv * gyr * Y ** (2 * s - 1)
        total += float(wn @ (integrand @ wq))
    rhs = mu * total
    return {"lhs": lhs, "rhs": rhs, "residual": abs(lhs - rhs)}
