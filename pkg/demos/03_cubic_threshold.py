"""
Cubic phase gate thresholds
===========================

The transfer function of the cubic gate is a Gaussian-smoothed Airy function.
Its most negative value shrinks as the smoothing width r grows; r*(eps) is the
width at which the dip is no deeper than eps.
"""

from qpdsim.cubic import airy_ai, min_over_w, r_star
from qpdsim.gates import cubic_rule

print("Ai(0) =", airy_ai(0.0))
for r in (1e-3, 1.0, 3.0, 5.5, 7.38, 8.7):
    w, v = min_over_w(r)
    print(f"r={r:<6g} min at w={w:+.4f}  value={v:+.4e}")

for eps in (1e-2, 1e-3, 1e-4):
    res = r_star(eps)
    print(f"eps={eps:g}: r* = {res.r_star:.4f} in {res.bracket}")

# the ordering bound for a cubic gate: s_out <= s_in - (2 gamma)^(1/3) r*
for gamma in (0.01, 0.1, 1.0):
    o = cubic_rule(1.0, gamma)
    print(f"gamma={gamma}: feasible={o.feasible}, bound={o.candidate[0] if o.candidate else None}")
