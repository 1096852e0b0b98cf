r"""Special functions and structural constants.

The modified Bessel function :math:`K_\nu` of fractional order is evaluated
with Temme's series for :math:`z \le 2` and Steed's continued fraction
(CF2) for :math:`z > 2`, both on the reduced order
:math:`\mu = \nu - \mathrm{round}(\nu) \in [-1/2, 1/2]`, followed by one
upward recurrence step when :math:`\nu \ge 1/2`.  All loops are vectorised
over the argument.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import zeta

__all__ = [
    "FracOrder",
    "FracConstants",
    "gamma",
    "bessel_k",
    "bessel_k_pair",
    "constants",
]

_EPS = 1e-16
_MAXIT = 10_000
_SWITCH = 2.0


class FracOrder(float):
    """Fractional order ``s``, a float restricted to the open interval (0, 1)."""

    def __new__(cls, s):
        s = float(s)
        if not 0.0 < s < 1.0:
            raise ValueError(f"fractional order must lie in (0, 1), got {s!r}")
        return super().__new__(cls, s)


def gamma(x):
    """Gamma function on the positive half line."""
    x = float(x)
    if not x > 0:
        raise ValueError(f"gamma is only provided for x > 0, got {x!r}")
    return math.gamma(x)


def _recip_gamma_coefficients(n=32):
    # Taylor coefficients of 1/Gamma(1+z) = exp(euler*z - sum_{k>=2} (-1)^k zeta(k) z^k / k)
    f = np.zeros(n)
    f[1] = np.euler_gamma
    for k in range(2, n):
        f[k] = -((-1) ** k) * zeta(k) / k
    g = np.zeros(n)
    g[0] = 1.0
    for m in range(1, n):
        j = np.arange(1, m + 1)
        g[m] = np.dot(j * f[j], g[m - j]) / m
    return g


_RG = _recip_gamma_coefficients()


def _temme_gammas(mu):
    """Return gam1, gam2, 1/Gamma(1+mu), 1/Gamma(1-mu) for |mu| <= 1/2."""
    powers = mu ** np.arange(_RG.size)
    gampl = float(np.dot(_RG, powers))
    gammi = float(np.dot(_RG, (-mu) ** np.arange(_RG.size)))
    odd = _RG[1::2]
    even = _RG[0::2]
    gam1 = -float(np.dot(odd, mu ** (2 * np.arange(odd.size))))
    gam2 = float(np.dot(even, mu ** (2 * np.arange(even.size))))
    return gam1, gam2, gampl, gammi


def _series_small(mu, x):
    # Temme's method, valid for |mu| <= 1/2 and 0 < x <= 2.
    x2 = 0.5 * x
    pimu = math.pi * mu
    fact = 1.0 if abs(pimu) < _EPS else pimu / math.sin(pimu)
    d = -np.log(x2)
    e = mu * d
    fact2 = np.where(np.abs(e) < _EPS, 1.0, np.sinh(e) / np.where(e == 0, 1.0, e))
    gam1, gam2, gampl, gammi = _temme_gammas(mu)
    ff = fact * (gam1 * np.cosh(e) + gam2 * fact2 * d)
    total = ff.copy()
    ee = np.exp(e)
    p = 0.5 * ee / gampl
    q = 0.5 / (ee * gammi)
    c = np.ones_like(x)
    dd = x2 * x2
    total1 = p.copy()
    mu2 = mu * mu
    active = np.ones(x.shape, dtype=bool)
    for i in range(1, _MAXIT):
        ff = np.where(active, (i * ff + p + q) / (i * i - mu2), ff)
        c = np.where(active, c * dd / i, c)
        p = np.where(active, p / (i - mu), p)
        q = np.where(active, q / (i + mu), q)
        delta = c * ff
        delta1 = c * (p - i * ff)
        total = np.where(active, total + delta, total)
        total1 = np.where(active, total1 + delta1, total1)
        active &= np.abs(delta) >= np.abs(total) * _EPS
        if not active.any():
            break
    else:
        raise RuntimeError("Bessel K series failed to converge")
    return total, total1 * 2.0 / x


def _steed_large(mu, x):
    # Steed's CF2 with Temme normalisation, valid for |mu| <= 1/2 and x > 2.
    mu2 = mu * mu
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = d.copy()
    delh = d.copy()
    q1 = np.zeros_like(x)
    q2 = np.ones_like(x)
    a1 = 0.25 - mu2
    q = np.full_like(x, a1)
    c = np.full_like(x, a1)
    a = -a1
    s = 1.0 + q * delh
    active = np.ones(x.shape, dtype=bool)
    for i in range(2, _MAXIT):
        a -= 2 * (i - 1)
        c_new = -a * c / i
        qnew = (q1 - b * q2) / a
        q1n, q2n = q2, qnew
        q_new = q + c_new * qnew
        b_new = b + 2.0
        d_new = 1.0 / (b_new + a * d)
        delh_new = (b_new * d_new - 1.0) * delh
        h_new = h + delh_new
        dels = q_new * delh_new
        s_new = s + dels
        c = np.where(active, c_new, c)
        q1 = np.where(active, q1n, q1)
        q2 = np.where(active, q2n, q2)
        q = np.where(active, q_new, q)
        b = np.where(active, b_new, b)
        d = np.where(active, d_new, d)
        delh = np.where(active, delh_new, delh)
        h = np.where(active, h_new, h)
        s = np.where(active, s_new, s)
        active &= np.abs(dels / s) >= _EPS
        if not active.any():
            break
    else:
        raise RuntimeError("Bessel K continued fraction failed to converge")
    h = a1 * h
    kmu = np.sqrt(math.pi / (2.0 * x)) * np.exp(-x) / s
    k1 = kmu * (mu + x + 0.5 - h) / x
    return kmu, k1


def bessel_k_pair(mu, z):
    r"""Return :math:`(K_\mu(z), K_{\mu+1}(z))` for :math:`|\mu| \le 1/2`.

    Both values come out of the same Temme / Steed evaluation; neither is
    derived from the other by recurrence.
    """
    mu = float(mu)
    if abs(mu) > 0.5:
        raise ValueError(f"reduced order must satisfy |mu| <= 1/2, got {mu!r}")
    z = np.asarray(z, dtype=float)
    if np.any(~(z > 0)):
        raise ValueError("Bessel K requires z > 0")
    flat = np.atleast_1d(z).ravel()
    kmu = np.empty_like(flat)
    k1 = np.empty_like(flat)
    small = flat <= _SWITCH
    if small.any():
        kmu[small], k1[small] = _series_small(mu, flat[small])
    if (~small).any():
        kmu[~small], k1[~small] = _steed_large(mu, flat[~small])
    return kmu.reshape(z.shape), k1.reshape(z.shape)


def bessel_k(nu, z):
    r"""Modified Bessel function of the second kind :math:`K_\nu(z)`.

    Parameters
    ----------
    nu : float
        Order in the open interval (0, 1).
    z : float or array_like
        Strictly positive argument(s).

    Returns
    -------
    float or ndarray
        Same shape as ``z``.
    """
    nu = float(nu)
    if not 0.0 < nu < 1.0:
        raise ValueError(f"order must lie in (0, 1), got {nu!r}")
    scalar = np.ndim(z) == 0
    nl = int(nu + 0.5)
    kmu, k1 = bessel_k_pair(nu - nl, z)
    out = k1 if nl == 1 else kmu
    return float(out) if scalar else out


@dataclass(frozen=True)
class FracConstants:
    """Normalising constants attached to a dimension ``d`` and order ``s``.

    ``c_ds`` multiplies the singular integral of the fractional Laplacian,
    ``mu_s`` the weighted conormal derivative of the extension, ``c_s`` the
    Bessel profile, and ``kappa_ds`` the half-space Poisson kernel.
    """

    d: int
    s: float
    c_ds: float
    mu_s: float
    c_s: float
    kappa_ds: float


def _poisson_mass(d, s):
    # integral over R^d of |(x, 1)|^(-d-2s), reduced to a radial integral
    integrand = lambda r: r ** (d - 1) * (1.0 + r * r) ** (-(d + 2 * s) / 2)
    radial, _ = integrate.quad(integrand, 0.0, np.inf, epsabs=0.0, epsrel=1e-13, limit=200)
    sphere = 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)
    return sphere * radial


def constants(d, s):
    """Compute the normalising constants for dimension ``d`` and order ``s``."""
    s = FracOrder(s)
    if int(d) != d or d < 1:
        raise ValueError(f"dimension must be a positive integer, got {d!r}")
    d = int(d)
    c_ds = 2 ** (2 * s) * s * gamma(d / 2 + s) / (math.pi ** (d / 2) * gamma(1 - s))
    mu_s = 2 ** (2 * s - 1) * gamma(s) / gamma(1 - s)
    c_s = 2 ** (1 - s) / gamma(s)
    kappa_ds = 1.0 / _poisson_mass(d, s)
    return FracConstants(d=d, s=float(s), c_ds=c_ds, mu_s=mu_s, c_s=c_s, kappa_ds=kappa_ds)
