"""
Heralded photon subtraction
===========================

Subtraction is modelled as a weak beam splitter with a vacuum ancilla whose
reflected arm is heralded by a single-photon projector. In the weak-reflection
limit theta = kappa sqrt(eps) the best output ordering has a closed form.
"""

import math

import numpy as np

from qpdsim.gates import subtraction_curve, subtraction_exact_rule, subtraction_limit_endpoint

grid = np.linspace(-0.9, 0.9, 7)
for kappa in (0.25, 0.5, 0.75, 1.0):
    rows = subtraction_curve(grid, kappa)
    print(f"kappa={kappa:.2f}", " ".join(f"{t:+.3f}" if ok else "  ---" for _, t, ok in rows))

# where each curve hits s_out = -1
for kappa in (0.25, 0.5, 1 / math.sqrt(2), 1.0):
    print(f"kappa={kappa:.4f}: curve ends at s_in* = {subtraction_limit_endpoint(kappa):+.4f}")

# the endpoint becomes positive only once kappa exceeds 1/sqrt(2), so for
# 1/2 < kappa < 1/sqrt(2) some Wigner-negative inputs remain admissible
print("s_in* at kappa = 0.6:", round(subtraction_limit_endpoint(0.6), 4))

# the exact rule approaches the limit as eps -> 0
for eps in (1e-2, 1e-4, 1e-6):
    o = subtraction_exact_rule(0.5, 0.5 * math.sqrt(eps), eps)
    print(f"eps={eps:g}: exact s_out = {o.candidate[0]:.6f}")
print("limit:", subtraction_curve([0.5], 0.5)[0][1])

# with a perfect detector (eps = 0) nothing is admissible
print("eps = 0:", subtraction_exact_rule(0.5, 0.3, 0.0).reason)
