"""Numerical laboratory for the fractional filtration equation ``u_t + (-Delta)^s Phi(u) = 0``."""

__version__ = "0.1.0"

from .specfun import FracOrder, FracConstants, bessel_k, constants, gamma  # noqa: E402
from .basis import DirichletBasis, Field, build_basis, dom_norm, hs_norm, spectral_frac_laplacian  # noqa: E402
from .extension import (  # noqa: E402
    EnergyWeight,
    ExtensionField,
    YRule,
    check_energy_pairing_identity,
    dtn_flux,
    extend_cylinder,
    poisson_extend,
    profile_psi,
    weighted_energy,
)
from .singular import CutoffGamma, SmoothFunction, WeightH, frac_lap_pv  # noqa: E402
from .evolve import (  # noqa: E402
    ConvergenceError,
    Nonlinearity,
    SolverConfig,
    Trajectory,
    resolvent_step,
    shift_reduce,
)
from .duality import BackwardCoefficient, backward_solve, build_coefficient, smooth_coefficient  # noqa: E402
