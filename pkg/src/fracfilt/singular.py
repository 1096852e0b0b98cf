"""Free-space fractional Laplacian in one dimension and cut-off estimates.

The operator is evaluated from the symmetrised integral

    (-Delta)^s f(x) = c_{1,s} int_0^inf (2 f(x) - f(x+z) - f(x-z)) z^{-1-2s} dz

split into a near field ``[0, delta]`` (Taylor expansion, needs ``f''``), a
mid field (adaptive quadrature with breakpoints) and a far field that is
closed-form for compactly supported ``f`` and reduced to a single period
through the Hurwitz zeta function for periodic ``f``.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize
from scipy.special import zeta

from .specfun import FracOrder, constants

__all__ = [
    "SmoothFunction",
    "CutoffGamma",
    "WeightH",
    "frac_lap_pv",
    "cutoff_scaling_scan",
    "tp_operator",
    "tp_scaling_scan",
    "qform",
    "qform_l1",
    "qform_scaling_scan",
    "frac_lap_of_h",
    "default_p",
    "loglog_slope",
]

_QUAD = dict(epsabs=1e-13, epsrel=1e-11, limit=400)


def _q(g, a, b):
    # the absolute target sits near roundoff; quad's complaints about it are expected
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return integrate.quad(g, a, b, **_QUAD)


@dataclass(frozen=True)
class SmoothFunction:
    """A real function of one variable with the metadata the quadratures need.

    ``f`` and ``d2f`` must accept arrays.  Exactly how the far field is
    handled depends on which of ``support`` (closed interval outside which
    ``f = 0``), ``period`` or ``decaying`` is given.  ``kinks`` lists points
    where higher derivatives jump, used as quadrature breakpoints.
    """

    f: object
    d2f: object = None
    d4f: object = None
    support: tuple = None
    period: float = None
    decaying: bool = False
    kinks: tuple = ()

    def __call__(self, x):
        return self.f(x)

    @classmethod
    def from_field(cls, phi):
        """Field on ``B_R`` extended by zero to the line."""
        basis = phi.basis
        lam = basis.lambdas
        d2 = lambda x: basis.eigenfunctions(x) @ (-lam * phi.coeffs)
        d4 = lambda x: basis.eigenfunctions(x) @ (lam ** 2 * phi.coeffs)
        return cls(f=phi, d2f=d2, d4f=d4, support=(-basis.R, basis.R))

    @classmethod
    def cosine(cls, k, phase=0.0):
        """``cos(k x + phase)``, periodic with period ``2 pi / |k|``."""
        return cls(
            f=lambda x: np.cos(k * np.asarray(x) + phase),
            d2f=lambda x: -k * k * np.cos(k * np.asarray(x) + phase),
            d4f=lambda x: k ** 4 * np.cos(k * np.asarray(x) + phase),
            period=2 * math.pi / abs(k),
        )

    @classmethod
    def constant(cls, c):
        return cls(f=lambda x: np.full(np.shape(x), float(c)),
                   d2f=lambda x: np.zeros(np.shape(x)),
                   d4f=lambda x: np.zeros(np.shape(x)), period=1.0)


def _smoothstep7(t):
    t = np.clip(t, 0.0, 1.0)
    return t ** 4 * (35 - 84 * t + 70 * t ** 2 - 20 * t ** 3)


def _smoothstep7_d1(t):
    inside = (t > 0) & (t < 1)
    return np.where(inside, 140 * t ** 3 * (1 - t) ** 3, 0.0)


def _smoothstep7_d2(t):
    inside = (t > 0) & (t < 1)
    return np.where(inside, 420 * t ** 2 * (1 - t) ** 2 * (1 - 2 * t), 0.0)


@dataclass(frozen=True)
class CutoffGamma:
    """Radial cut-off ``gamma_R(x) = xi(|x|/R)``.

    ``xi = 1`` on ``[0, 1]``, ``0`` on ``[2, inf)`` and a degree-7
    smoothstep in between, so ``gamma_R`` is C^3.
    """

    R: float

    def __post_init__(self):
        if not self.R >= 1:
            raise ValueError(f"cut-off scale must satisfy R >= 1, got {self.R!r}")

    def __call__(self, x):
        r = np.abs(np.asarray(x, dtype=float)) / self.R
        return 1.0 - _smoothstep7(r - 1.0)

    def d1(self, x):
        x = np.asarray(x, dtype=float)
        return -np.sign(x) * _smoothstep7_d1(np.abs(x) / self.R - 1.0) / self.R

    def d2(self, x):
        r = np.abs(np.asarray(x, dtype=float)) / self.R
        return -_smoothstep7_d2(r - 1.0) / self.R ** 2

    def as_function(self):
        R = self.R
        return SmoothFunction(f=self, d2f=self.d2, support=(-2 * R, 2 * R),
                              kinks=(-2 * R, -R, R, 2 * R))


def default_p(s, d=1):
    """Smallest admissible Holder exponent plus a 0.1 margin.

    Admissible means ``p > 1`` and ``2s > d/p'``.  When the margin would leave
    the admissible range the midpoint of the range is used instead.
    """
    s = FracOrder(s)
    if 2 * s >= d:
        return 1.1
    p_max = 1.0 / (1.0 - 2 * s / d)
    return 1.1 if 1.1 < p_max else 0.5 * (1.0 + p_max)


def _check_p(p, s, d=1):
    if not p > 1:
        raise ValueError(f"exponent p must exceed 1, got {p!r}")
    p_conj = p / (p - 1)
    if not 2 * s > d / p_conj:
        raise ValueError(f"need 2s > d/p' but 2s = {2 * s:g} and d/p' = {d / p_conj:g}")
    return p_conj


@dataclass(frozen=True)
class WeightH:
    """Weight ``h(x) = (1 + x^2)^{-alpha/2}`` with ``alpha`` in ``(d, d + 2s)``.

    The envelope constants satisfy ``c1/(1+|x|^alpha) <= h <= c2/(1+|x|^alpha)``.
    """

    alpha: float
    s: float
    d: int = 1

    def __post_init__(self):
        s = FracOrder(self.s)
        if self.d != 1:
            raise NotImplementedError("the weight is implemented for d = 1")
        if not self.d < self.alpha < self.d + 2 * s:
            raise ValueError(f"alpha must lie in ({self.d}, {self.d + 2 * s:g}), got {self.alpha!r}")

    @property
    def c1(self):
        return 1.0

    @property
    def c2(self):
        return 2 ** (1 - self.alpha / 2)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return (1 + x * x) ** (-self.alpha / 2)

    def d1(self, x):
        x = np.asarray(x, dtype=float)
        return -self.alpha * x * (1 + x * x) ** (-self.alpha / 2 - 1)

    def d2(self, x):
        a = self.alpha
        x2 = np.asarray(x, dtype=float) ** 2
        return a * ((a + 1) * x2 - 1) * (1 + x2) ** (-a / 2 - 2)

    def mass(self):
        """``int h dx`` in closed form, ``sqrt(pi) Gamma((alpha-1)/2) / Gamma(alpha/2)``."""
        a = self.alpha
        return math.sqrt(math.pi) * math.gamma((a - 1) / 2) / math.gamma(a / 2)

    def as_function(self):
        return SmoothFunction(f=self, d2f=self.d2, decaying=True)


def _breakpoints(func, x, lo, hi):
    pts = []
    if func.support is not None:
        pts += [abs(x - func.support[0]), abs(x - func.support[1])]
    pts += [abs(x - k) for k in func.kinks]
    return sorted({p for p in pts if lo < p < hi})


def frac_lap_pv(func, s, x, delta=1e-3):
    """``(-Delta)^s f(x)`` on the line for a :class:`SmoothFunction`.

    ``delta`` is the near-field radius in which the second-order Taylor
    expansion (fourth order when ``d4f`` is known) replaces the integrand.
    """
    s = FracOrder(s)
    if func.d2f is None:
        raise ValueError("frac_lap_pv needs the second derivative of f near x")
    if func.support is None and func.period is None and not func.decaying:
        raise ValueError("frac_lap_pv needs a compact support, a period or decay at infinity")
    x = float(x)
    c = constants(1, s).c_ds
    f = func.f
    fx = float(f(x))

    near = -float(func.d2f(x)) * delta ** (2 - 2 * s) / (2 - 2 * s)
    if func.d4f is not None:
        near -= float(func.d4f(x)) / 12.0 * delta ** (4 - 2 * s) / (4 - 2 * s)

    g = lambda z: (2 * fx - float(f(x + z)) - float(f(x - z))) * z ** (-1 - 2 * s)

    if func.support is not None:
        a, b = func.support
        A = max(abs(x - a), abs(x - b), delta)
        pts = _breakpoints(func, x, delta, A)
        mid = _quad(g, delta, A, pts)
        far = 2 * fx * A ** (-2 * s) / (2 * s)
    elif func.period is not None:
        P = float(func.period)
        n0 = max(1, math.ceil(delta / P) + 1)
        mid = _quad(g, delta, n0 * P, [j * P for j in range(1, n0)])
        gp = lambda u: (2 * fx - float(f(x + u)) - float(f(x - u))) * zeta(1 + 2 * s, n0 + u / P)
        far = P ** (-1 - 2 * s) * _quad(gp, 0.0, P, [])
    else:
        A = max(1.0, 4 * delta) + abs(x)
        mid = _quad(g, delta, A, [])
        far, _ = _q(g, A, np.inf)
    return c * (near + mid + far)


def _quad(g, a, b, pts):
    edges = [a] + list(pts) + [b]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi > lo:
            val, _ = _q(g, lo, hi)
            total += val
    return total


def _sup_abs(fn, lo, hi, n=161):
    """Maximum of ``|fn|`` on ``[lo, hi]``: grid search plus bounded refinement."""
    xs = np.linspace(lo, hi, n)
    vals = np.abs([fn(x) for x in xs])
    i = int(np.argmax(vals))
    a, b = xs[max(i - 1, 0)], xs[min(i + 1, n - 1)]
    res = optimize.minimize_scalar(lambda x: -abs(fn(x)), bounds=(a, b), method="bounded",
                                   options={"xatol": 1e-10 * max(1.0, hi)})
    return max(float(vals[i]), -float(res.fun))


def loglog_slope(xs, ys):
    """Least-squares slope of ``log ys`` against ``log xs``."""
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def cutoff_scaling_scan(s, Rs=(1, 2, 4, 8), n=161):
    """Rows ``(R, sup|(-Delta)^s gamma_R|, sup * R^{2s})`` over ``R`` in ``Rs``."""
    s = FracOrder(s)
    rows = []
    for R in Rs:
        fn = CutoffGamma(R).as_function()
        sup = _sup_abs(lambda x: frac_lap_pv(fn, s, x), 0.0, 3.0 * R, n)
        rows.append((float(R), sup, sup * R ** (2 * s)))
    return rows


def tp_operator(func, p, s, x):
    """``T_p f(x) = int |f(x) - f(y)|^p |x - y|^{-1-ps} dy``."""
    s = FracOrder(s)
    if not p > 1:
        raise ValueError(f"exponent p must exceed 1, got {p!r}")
    x = float(x)
    f = func.f
    fx = float(f(x))
    g = lambda z: (abs(fx - float(f(x + z))) ** p + abs(fx - float(f(x - z))) ** p) * z ** (-1 - p * s)
    if func.support is not None:
        a, b = func.support
        A = max(abs(x - a), abs(x - b), 1e-3)
        pts = _breakpoints(func, x, 0.0, A)
        return _quad(g, 0.0, A, pts) + 2 * abs(fx) ** p * A ** (-p * s) / (p * s)
    if func.decaying:
        A = 1.0 + abs(x)
        val, _ = _q(g, A, np.inf)
        return _quad(g, 0.0, A, []) + val
    raise ValueError("tp_operator needs a compact support or decay at infinity")


def tp_scaling_scan(s, p=None, Rs=(1, 2, 4), n=81):
    """Rows ``(R, sup T_p(gamma_R), sup * R^{ps})``."""
    s = FracOrder(s)
    p = default_p(s) if p is None else p
    rows = []
    for R in Rs:
        fn = CutoffGamma(R).as_function()
        sup = _sup_abs(lambda x: tp_operator(fn, p, s, x), 0.0, 3.0 * R, n)
        rows.append((float(R), sup, sup * R ** (p * s)))
    return rows


def qform(h, gamma, x):
    """``Q(h, gamma_R)(x) = c_{1,s} int (h(x)-h(y))(gamma(x)-gamma(y)) |x-y|^{-1-2s} dy``."""
    s = FracOrder(h.s)
    _check_p(default_p(s, h.d), s, h.d)
    x = float(x)
    hx = float(h(x))
    gx = float(gamma(x))

    def g(z):
        out = 0.0
        for y in (x + z, x - z):
            out += (hx - float(h(y))) * (gx - float(gamma(y)))
        return out * z ** (-1 - 2 * s)

    R = gamma.R
    pts = sorted({abs(x - k) for k in (-2 * R, -R, R, 2 * R) if abs(x - k) > 0})
    A = abs(x) + 2 * R
    inner = _quad(g, 0.0, A, [p for p in pts if p < A])
    tail, _ = _q(g, A, np.inf)
    return constants(1, s).c_ds * (inner + tail)


def qform_l1(h, gamma, p=None):
    """``int |Q(h, gamma_R)| dx`` over the line (even integrand, folded).

    ``p`` is only validated here: the admissibility ``2s > d/p'`` is what
    makes the predicted decay exponent ``2s - d/p'`` positive.
    """
    s = FracOrder(h.s)
    p = default_p(s, h.d) if p is None else p
    _check_p(p, s, h.d)
    R = gamma.R
    q = lambda x: abs(qform(h, gamma, x))
    edges = [0.0, R, 2 * R, 4 * R]
    total = sum(integrate.quad(q, a, b, epsabs=1e-12, epsrel=1e-8, limit=200)[0]
                for a, b in zip(edges[:-1], edges[1:]))
    tail, _ = integrate.quad(q, edges[-1], np.inf, epsabs=1e-12, epsrel=1e-8, limit=200)
    return 2.0 * (total + tail)


def qform_scaling_scan(s, alpha=1.5, Rs=(1, 2, 4, 8), p=None):
    """Rows ``(R, ||Q(h, gamma_R)||_1)`` and the exponent ``2s - d/p'`` they should follow."""
    s = FracOrder(s)
    p = default_p(s) if p is None else p
    p_conj = _check_p(p, s)
    h = WeightH(alpha, s)
    rows = [(float(R), qform_l1(h, CutoffGamma(R), p)) for R in Rs]
    return rows, 2 * s - 1.0 / p_conj


def frac_lap_of_h(h, x):
    """``(-Delta)^s h(x)`` for the weight ``h``."""
    return frac_lap_pv(h.as_function(), h.s, x)
