"""Half-plane Poisson extension of sampled data (d = 1).

The kernel P_s(x, y) = kappa y^2s |(x, y)|^(-1-2s) has unit mass.  The
extension of a piecewise-linear datum is computed by exact product
integration, and the decay in x of the extension of compactly supported data
follows the kernel: |x|^(-1-2s).
"""

import warnings

import numpy as np

from fracfilt.extension import TruncationWarning, poisson_extend, poisson_kernel_mass
from fracfilt.singular import loglog_slope

for s in (0.25, 0.5, 0.75):
    masses = [poisson_kernel_mass(y, s) for y in (0.1, 1.0, 10.0)]
    xs = np.linspace(-1, 1, 3)
    X = np.logspace(1, 3, 9)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)  # the datum jumps at the window edge
        E = poisson_extend(xs, np.ones(3), s, X, 1.0)
    print(f"s={s}: mass-1 = {max(abs(m - 1) for m in masses):.1e}, "
          f"decay slope {loglog_slope(X, np.abs(E)):+.4f} (kernel: {-(1 + 2 * s):+.2f})")

xs = np.linspace(-1, 1, 201)
vs = np.maximum(0, 1 - xs ** 2)
print("\nTrace recovery as y -> 0 at x = 0.3 (datum value 0.91):")
for y in (1e-1, 1e-3, 1e-6):
    print(f"  y={y:.0e}: E = {float(poisson_extend(xs, vs, 0.5, 0.3, y)):.8f}")
