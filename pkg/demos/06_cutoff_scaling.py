"""Scaling of fractional operators applied to cut-offs gamma_R.

(-Delta)^s gamma_R and T_p gamma_R scale exactly like R^(-2s) and R^(-ps).
The commutator-type form Q(h, gamma_R) against the weight h = (1+x^2)^(-alpha/2)
has an L^1 norm that decays with R; the script prints its local slopes so
the approach to the asymptotic rate is visible.
"""

import math

from fracfilt.singular import cutoff_scaling_scan, default_p, loglog_slope, qform_scaling_scan, tp_scaling_scan

s = 0.5
Rs = (1, 2, 4, 8)
p = default_p(s)
rows = cutoff_scaling_scan(s, Rs, n=81)
print("R    sup|(-Delta)^s gamma_R|   sup * R^2s")
for R, sup, scaled in rows:
    print(f"{R:<4g} {sup:.12f}          {scaled:.12f}")
print(f"slope {loglog_slope(Rs, [r[1] for r in rows]):+.6f} (expected {-2 * s:+.3f})")

rows = tp_scaling_scan(s, p, Rs, n=41)
print(f"\nT_p with p = {p}: slope {loglog_slope(Rs, [r[1] for r in rows]):+.6f} (expected {-p * s:+.3f})")

for alpha in (1.5, 1.9):
    q, expo = qform_scaling_scan(s, alpha, Rs, p)
    vals = [v for _, v in q]
    local = [math.log2(vals[i + 1] / vals[i]) for i in range(len(vals) - 1)]
    print(f"\nalpha = {alpha}: ||Q||_1 = " + ", ".join(f"{v:.4f}" for v in vals))
    print(f"  fitted slope {loglog_slope(Rs, vals):+.3f}, local slopes " + ", ".join(f"{v:+.3f}" for v in local)
          + f", bound exponent {-expo:+.3f}")
