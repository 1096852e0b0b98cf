"""Dirichlet eigenbasis of the interval ``(-R, R)`` and spectral fractional powers.

The grid consists of the ``N`` uniform interior nodes ``x_j = -R + j h`` with
``h = 2R / (N + 1)``.  On these nodes the sampled eigenfunctions are exactly
the vectors of the type-I discrete sine transform, so analysis and synthesis
are a DST pair and discrete orthonormality holds to rounding.

Two eigenvalue families share this eigenbasis:

``"spectral"``
    The exact Dirichlet eigenvalues ``(k pi / 2R)^2``.
``"discrete"``
    The eigenvalues of the three-point Dirichlet Laplacian on the grid,
    ``(2/h)^2 sin^2(k pi / (2(N+1)))``.  Fractional powers of this matrix keep
    non-positive off-diagonal entries for every ``s``, which is what gives the
    time steppers a discrete comparison principle.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.fft import dst

__all__ = [
    "DirichletBasis",
    "Field",
    "build_basis",
    "spectral_frac_laplacian",
    "hs_norm",
    "dom_norm",
    "OPERATORS",
]

OPERATORS = ("spectral", "discrete")


@dataclass(frozen=True, eq=False)
class DirichletBasis:
    """Immutable eigenstructure of the Dirichlet Laplacian on ``B_R``."""

    R: float
    d: int
    N: int
    lambdas: np.ndarray = field(repr=False)
    discrete_lambdas: np.ndarray = field(repr=False)
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    @property
    def h(self):
        return 2.0 * self.R / (self.N + 1)

    @property
    def wavenumbers(self):
        """Square roots of the exact eigenvalues."""
        return np.sqrt(self.lambdas)

    def eigenvalues(self, operator="spectral"):
        if operator == "spectral":
            return self.lambdas
        if operator == "discrete":
            return self.discrete_lambdas
        raise ValueError(f"unknown operator {operator!r}; expected one of {OPERATORS}")

    def symbol(self, s, operator="spectral"):
        """Multipliers ``lambda_k^s`` of the fractional power."""
        return self.eigenvalues(operator) ** float(s)

    def analyze(self, values):
        values = np.asarray(values, dtype=float)
        if values.shape[-1] != self.N:
            raise ValueError(f"expected {self.N} grid samples, got {values.shape[-1]}")
        return self.h / (2.0 * np.sqrt(self.R)) * dst(values, type=1, axis=-1)

    def synthesize(self, coeffs):
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape[-1] != self.N:
            raise ValueError(f"expected {self.N} coefficients, got {coeffs.shape[-1]}")
        return dst(coeffs, type=1, axis=-1) / (2.0 * np.sqrt(self.R))

    def apply_power(self, values, s, operator="spectral"):
        """Apply ``(-Delta)^s_R`` to grid samples (last axis)."""
        return self.synthesize(self.symbol(s, operator) * self.analyze(values))

    def eigenfunctions(self, x, k=None):
        """Evaluate ``phi_k(x)`` at arbitrary points.

        Returns an array of shape ``x.shape + (len(k),)``; points outside
        ``[-R, R]`` evaluate to zero.
        """
        x = np.asarray(x, dtype=float)
        k = np.arange(1, self.N + 1) if k is None else np.atleast_1d(k)
        arg = np.multiply.outer(x + self.R, k * np.pi / (2.0 * self.R))
        out = np.sin(arg) / np.sqrt(self.R)
        inside = (np.abs(x) <= self.R)[..., None]
        return np.where(inside, out, 0.0)

    def eigenfunction_derivatives(self, x, k=None):
        x = np.asarray(x, dtype=float)
        k = np.arange(1, self.N + 1) if k is None else np.atleast_1d(k)
        w = k * np.pi / (2.0 * self.R)
        out = w * np.cos(np.multiply.outer(x + self.R, w)) / np.sqrt(self.R)
        inside = (np.abs(x) <= self.R)[..., None]
        return np.where(inside, out, 0.0)

    def evaluate(self, coeffs, x):
        """Evaluate the sine series with ``coeffs`` at arbitrary points."""
        return self.eigenfunctions(x) @ np.asarray(coeffs, dtype=float)

    def gram(self):
        phi = self.eigenfunctions(self.nodes)
        return phi.T @ (self.weights[:, None] * phi)

    def project(self, func):
        """Field obtained by sampling a callable on the grid."""
        return Field.from_values(self, func(self.nodes))

    def mode(self, k):
        """The ``k``-th eigenfunction (1-based) as a Field."""
        c = np.zeros(self.N)
        c[k - 1] = 1.0
        return Field.from_coeffs(self, c)

    def zeros(self):
        return Field.from_coeffs(self, np.zeros(self.N))


def build_basis(R=1.0, d=1, N=256):
    """Construct the Dirichlet eigenbasis of ``B_R`` with ``N`` modes."""
    if int(N) != N or N < 1:
        raise ValueError(f"mode count must be a positive integer, got {N!r}")
    if not R > 0:
        raise ValueError(f"radius must be positive, got {R!r}")
    if d != 1:
        raise NotImplementedError("only d = 1 is supported; the radial basis for d >= 2 is not built")
    N = int(N)
    R = float(R)
    k = np.arange(1, N + 1)
    h = 2.0 * R / (N + 1)
    lambdas = (k * np.pi / (2.0 * R)) ** 2
    discrete = (2.0 / h * np.sin(k * np.pi / (2.0 * (N + 1)))) ** 2
    nodes = -R + h * k
    weights = np.full(N, h)
    for arr in (lambdas, discrete, nodes, weights):
        arr.setflags(write=False)
    return DirichletBasis(R=R, d=1, N=N, lambdas=lambdas, discrete_lambdas=discrete,
                          nodes=nodes, weights=weights)


@dataclass(frozen=True, eq=False)
class Field:
    """Function on ``B_R`` held both as sine coefficients and as grid samples."""

    basis: DirichletBasis
    coeffs: np.ndarray
    values: np.ndarray

    @classmethod
    def from_values(cls, basis, values):
        values = np.array(values, dtype=float)
        if values.shape != (basis.N,):
            raise ValueError(f"expected {basis.N} grid samples, got shape {values.shape}")
        return cls(basis, basis.analyze(values), values)

    @classmethod
    def from_coeffs(cls, basis, coeffs):
        coeffs = np.array(coeffs, dtype=float)
        if coeffs.shape != (basis.N,):
            raise ValueError(f"expected {basis.N} coefficients, got shape {coeffs.shape}")
        return cls(basis, coeffs, basis.synthesize(coeffs))

    def _check(self, other):
        if other.basis is not self.basis:
            raise ValueError("fields live in different bases")

    def __add__(self, other):
        if isinstance(other, Field):
            self._check(other)
            return Field(self.basis, self.coeffs + other.coeffs, self.values + other.values)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, Field):
            self._check(other)
            return Field(self.basis, self.coeffs - other.coeffs, self.values - other.values)
        return NotImplemented

    def __mul__(self, c):
        if np.ndim(c) == 0:
            return Field(self.basis, c * self.coeffs, c * self.values)
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return Field(self.basis, -self.coeffs, -self.values)

    def map(self, func):
        """Pointwise image ``func(values)`` re-analysed on the same grid."""
        return Field.from_values(self.basis, func(self.values))

    def inner(self, other):
        self._check(other)
        return float(np.dot(self.coeffs, other.coeffs))

    def norm(self):
        return float(np.sqrt(np.dot(self.coeffs, self.coeffs)))

    def __call__(self, x):
        return self.basis.evaluate(self.coeffs, x)


def spectral_frac_laplacian(f, s, operator="spectral"):
    """``(-Delta)^s_R f``: multiply the sine coefficients by ``lambda_k^s``.

    Any positive power is accepted; ``s = 1`` recovers the Dirichlet Laplacian.
    """
    s = float(s)
    if not s > 0:
        raise ValueError(f"power must be positive, got {s!r}")
    return Field.from_coeffs(f.basis, f.basis.symbol(s, operator) * f.coeffs)


def hs_norm(f, s, operator="spectral"):
    """Norm of ``H^s_0(B_R)``, i.e. ``sqrt(sum lambda_k^s fhat_k^2)``."""
    return float(np.sqrt(np.sum(f.basis.symbol(s, operator) * f.coeffs ** 2)))


def dom_norm(f, s, operator="spectral"):
    """Graph norm of the domain of ``(-Delta)^s_R``: ``sqrt(sum lambda_k^{2s} fhat_k^2)``."""
    return float(np.sqrt(np.sum(f.basis.symbol(2 * float(s), operator) * f.coeffs ** 2)))
