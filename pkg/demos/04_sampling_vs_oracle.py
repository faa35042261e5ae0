"""
Sampling a simulable circuit
============================

For a simulable Gaussian circuit every transfer function is a Gaussian kernel,
so outcomes can be drawn by sampling the input, pushing the point through the
kernels and measuring. A truncated Fock-space simulation gives the reference.
"""

import math

import numpy as np
from scipy import stats

from qpdsim import BeamSplitter, CircuitSpec, Coherent, Heterodyne, Loss, SqueezedVacuum, analyze, run_sampling
from qpdsim import fock

c = CircuitSpec(1, [SqueezedVacuum(0.2)], [Loss(0, 0.8)], [Heterodyne()])
samples = run_sampling(c, analyze(c), 100_000, seed=1)
oracle = fock.born_probabilities(c)
for quad, name in ((0, "q"), (1, "p")):
    ks = stats.kstest(samples.outcomes[:, 0, quad], oracle.marginal_cdf(0, quad)).statistic
    print(f"{name}: KS distance to oracle = {ks:.4f}")

# the same seed gives the same records, whatever the thread count
again = run_sampling(c, analyze(c), 1000, seed=1, threads=3)
print("reproducible:", np.array_equal(again.outcomes, samples.outcomes[:1000]))

two = CircuitSpec(2, [Coherent(1), Coherent(0)], [BeamSplitter(0, 1, math.pi / 4)], [Heterodyne()] * 2)
s = run_sampling(two, analyze(two), 50_000, seed=2).outcomes.reshape(-1, 4)
o = fock.born_probabilities(two, dims=15)
print("mean    ", np.round(s.mean(axis=0), 3), "oracle", np.round(o.outcome_mean, 3))
print("cov diag", np.round(np.diag(np.cov(s, rowvar=False)), 3), "oracle", np.round(np.diag(o.outcome_cov), 3))
