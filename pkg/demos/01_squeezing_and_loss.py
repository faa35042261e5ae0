"""
Squeezing, Wigner negativity and loss
=====================================

A squeezer is harmless for a Gaussian input but breaks the positive
decomposition of a Fock input. Inserting loss in front of it restores
simulability, and the analyzer tells us how much is needed.
"""

import math

from qpdsim import CircuitSpec, Fock, Heterodyne, Loss, SqueezedVacuum, Squeeze, analyze, loss_tolerance

# a squeezed vacuum has ordering e^{-2r}; squeezing again shrinks it further
gaussian = CircuitSpec(1, [SqueezedVacuum(0.2)], [Squeeze(0, 0.3)], [Heterodyne()])
v = analyze(gaussian)
print("squeezed vacuum -> squeeze:", v.outcome, [round(t[0], 4) for t in v.tau_trace])

# a single photon starts at s = -1 and any squeezing pushes it below
fock = CircuitSpec(1, [Fock(1)], [Squeeze(0, 0.3)], [Heterodyne()])
v = analyze(fock)
print("Fock(1) -> squeeze:", v.outcome, "|", v.failure.reason)

# the smallest loss before the squeezer that rescues the circuit
deficit = loss_tolerance(fock, 0)
# bisection stops on the simulable side, so this overshoots by at most 1e-3
print(f"loss needed: 1 - eta = {deficit:.4f} (closed form {1 - (1 + math.exp(-0.6)) / 2:.4f})")

rescued = fock.with_layers([Loss(0, 1 - deficit - 1e-3), Squeeze(0, 0.3)])
print("with loss inserted:", analyze(rescued).outcome)

# loss always relaxes the ordering: s_out = 1 - eta (1 - s_in)
for eta in (1.0, 0.9, 0.5, 0.0):
    c = CircuitSpec(1, [SqueezedVacuum(0.5)], [Loss(0, eta), Squeeze(0, 0.5)], [Heterodyne()])
    print(f"eta={eta:.1f}: orderings", [round(t[0], 4) for t in analyze(c).tau_trace])
