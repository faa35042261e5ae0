import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from qpdsim import fock
from qpdsim.analyzer import analyze
from qpdsim.circuit import CircuitSpec, Heterodyne, IdealOnOff, SinglePhotonProjector
from qpdsim.gates import BeamSplitter, CubicPhase, Displace, Loss, PhaseShift, Squeeze, apply_rule
from qpdsim.phasespace import Coherent, Fock, SqueezedVacuum, Thermal, depth_of_state, gaussian_moments
from qpdsim.sampler import (
    GaussianKernel,
    UnsupportedCircuitError,
    check_supported,
    click_probability,
    kernel_for_gate,
    run_sampling,
    sample_input,
    sample_measurement,
)

HET = Heterodyne()


def rng(seed=0):
    return np.random.default_rng(seed)


# -- kernels -------------------------------------------------------------------

def test_identity_kernel_is_deterministic():
    k = kernel_for_gate(PhaseShift(0, 0.0), [0.4], [0.4])
    assert k.deterministic
    assert np.allclose(k.A, np.eye(2))


def test_loss_kernel_example():
    k = kernel_for_gate(Loss(0, 0.5), [1.0], [0.0])
    assert np.allclose(k.A, math.sqrt(0.5) * np.eye(2))
    # quadrature units: 1 - eta - s_out + eta s_in = 1
    assert np.allclose(k.cov, np.eye(2))


def test_squeeze_kernel_below_bound_is_positive():
    k = kernel_for_gate(Squeeze(0, 0.3), [0.0], [-0.2])
    assert np.linalg.eigvalsh(k.cov).min() > 0


def test_kernel_rejects_infeasible_and_non_gaussian():
    with pytest.raises(ValueError):
        kernel_for_gate(Squeeze(0, 0.3), [0.5], [0.4])
    with pytest.raises(UnsupportedCircuitError):
        kernel_for_gate(CubicPhase(0, 1.0), [0.5], [-0.1])


GATES = [
    Squeeze(0, 0.3),
    Squeeze(0, -0.2),
    Loss(0, 0.6),
    PhaseShift(0, 0.9),
    Displace(0, 0.4 - 0.3j),
]
INPUTS = [Coherent(0), Coherent(0.7 + 0.2j), Thermal(0.3)]


@pytest.mark.parametrize("gate", GATES, ids=lambda g: type(g).__name__)
@pytest.mark.parametrize("state", INPUTS, ids=repr)
@pytest.mark.parametrize("back_off", [0.0, 0.35])
def test_pushforward_matches_oracle(gate, state, back_off):
    s_in = depth_of_state(state) - back_off
    s_out = apply_rule(gate, [s_in]).max_output[0] - back_off
    k = kernel_for_gate(gate, [s_in], [s_out])
    mu, sigma = gaussian_moments(state)
    mean = k.A @ mu + k.b
    cov = k.A @ (sigma - s_in * np.eye(2)) @ k.A.T + k.cov
    out = fock.apply_gate(fock.prepare_state([state], 30), gate)
    o_mean, o_cov = fock.quadrature_moments(out)
    assert np.allclose(mean, o_mean, atol=1e-8)
    assert np.allclose(cov, o_cov - s_out * np.eye(2), atol=1e-8)


@pytest.mark.parametrize("theta", [0.3, math.pi / 4, 1.2])
def test_beamsplitter_pushforward_matches_oracle(theta):
    states = [Coherent(0.5j), Thermal(0.2)]
    s_in = [depth_of_state(s) for s in states]
    s_out = apply_rule(BeamSplitter(0, 1, theta), s_in).max_output
    k = kernel_for_gate(BeamSplitter(0, 1, theta), s_in, s_out)
    mus, sigmas = zip(*(gaussian_moments(s) for s in states))
    mu = np.concatenate(mus)
    sigma = np.zeros((4, 4))
    sigma[:2, :2], sigma[2:, 2:] = sigmas
    mean = k.A @ mu
    cov = k.A @ (sigma - np.diag(np.repeat(s_in, 2))) @ k.A.T + k.cov
    out = fock.apply_gate(fock.prepare_state(states, 15), BeamSplitter(0, 1, theta))
    o_mean, o_cov = fock.quadrature_moments(out)
    assert np.allclose(mean, o_mean, atol=1e-8)
    assert np.allclose(cov, o_cov - np.diag(np.repeat(s_out, 2)), atol=1e-8)


@settings(max_examples=50, deadline=None)
@given(st.floats(-1, 3), st.floats(0, 1), st.floats(0, 1))
def test_loss_kernel_psd_iff_rule(s_in, eta, frac):
    bound = 1 - eta * (1 - s_in)
    s_out = -1 + frac * (bound + 1)
    k = kernel_for_gate(Loss(0, eta), [s_in], [s_out])
    assert np.linalg.eigvalsh(k.cov).min() >= -1e-12


def test_kernel_normalisation_monte_carlo():
    k = kernel_for_gate(Squeeze(0, 0.3), [0.5], [-0.4])
    x = np.array([0.3, -1.0])
    g = rng(11)
    # importance sampling from a broad Gaussian proposal
    scale = 3.0
    y = k.A @ x + scale * g.standard_normal((20000, 2))
    q = stats.multivariate_normal(k.A @ x, scale**2 * np.eye(2)).pdf(y)
    ratio = k.density(x, y) / q
    mass, err = ratio.mean(), ratio.std() / math.sqrt(len(ratio))
    assert abs(mass - 1) < 3 * err


def test_kernel_fusion_algebra_and_sampling():
    k1 = kernel_for_gate(Squeeze(0, 0.2), [0.9], [0.4])
    k2 = kernel_for_gate(Loss(0, 0.7), [0.4], [0.3])
    fused = k1.then(k2)
    x = np.array([1.0, -0.5])
    g = rng(5)
    z = g.standard_normal((2, 40000, 2))
    two_step = (x @ k1.A.T + k1.b + z[0] @ k1.noise_factor().T) @ k2.A.T + k2.b + z[1] @ k2.noise_factor().T
    one_step = x @ fused.A.T + fused.b + rng(6).standard_normal((40000, 2)) @ fused.noise_factor().T
    for axis in range(2):
        assert stats.ks_2samp(two_step[:, axis], one_step[:, axis]).pvalue > 1e-3
    assert np.allclose(fused.cov, k2.A @ k1.cov @ k2.A.T + k2.cov)


def test_fusion_needs_same_modes():
    a = kernel_for_gate(Loss(0, 0.5), [0.0], [0.0])
    b = kernel_for_gate(Loss(1, 0.5), [0.0], [0.0])
    with pytest.raises(ValueError):
        a.then(b)


# -- inputs and detectors --------------------------------------------------------

def test_sample_input_coherent_point_mass():
    pts = [sample_input([Coherent(0.5 - 1j)], [1.0], rng(i)) for i in range(3)]
    assert all(np.allclose(p, [1.0, -2.0]) for p in pts)


@pytest.mark.parametrize("state,tau,var", [(Coherent(0), 0.0, 1.0), (Thermal(0.5), 0.0, 2.0)])
def test_sample_input_covariance(state, tau, var):
    g = rng(3)
    pts = np.array([sample_input([state], [tau], g) for _ in range(20000)])
    assert np.allclose(np.cov(pts.T), var * np.eye(2), atol=0.05)


def test_sample_input_rejects():
    with pytest.raises(UnsupportedCircuitError):
        sample_input([Fock(1)], [-1.0], rng())
    with pytest.raises(ValueError):
        sample_input([SqueezedVacuum(0.3)], [0.9], rng())


def test_heterodyne_measurement():
    p = np.array([0.4, -0.2])
    assert np.allclose(sample_measurement(HET, -1.0, p, rng()), p)
    g = rng(9)
    out = np.array([sample_measurement(HET, 1.0, p, g) for _ in range(20000)])
    assert np.allclose(out.mean(axis=0), p, atol=0.05)
    assert np.allclose(np.cov(out.T), 2 * np.eye(2), atol=0.08)


def test_measurement_rejects_below_threshold():
    with pytest.raises(ValueError):
        sample_measurement(IdealOnOff(), 0.5, np.zeros(2), rng())


@pytest.mark.parametrize("det,tau", [(IdealOnOff(), 1.0), (IdealOnOff(), 2.0), (SinglePhotonProjector(0.0), 1.0),
                                     (SinglePhotonProjector(0.4), 0.6), (SinglePhotonProjector(0.4), 1.5)])
def test_click_weights_in_unit_interval(det, tau):
    x = np.linspace(-12, 12, 241)
    pts = np.stack(np.meshgrid(x, x), axis=-1)
    w = click_probability(det, tau, pts)
    assert w.min() >= -1e-15 and w.max() <= 1


def test_click_weight_negative_below_threshold():
    assert click_probability(SinglePhotonProjector(0.2), 0.6, np.zeros(2)) < 0
    assert click_probability(IdealOnOff(), 0.5, np.zeros(2)) < 0


@pytest.mark.parametrize("eps,tau", [(0.0, 1.0), (0.3, 0.7), (0.3, 1.2)])
def test_click_weight_matches_oracle_grid(eps, tau):
    # pi W^(-tau) of the POVM element on the oracle grid, at x = 2 alpha
    proj = fock.click_operator(SinglePhotonProjector(eps), 30)
    grid = fock.quasi_pdf(fock.TruncatedState((30,), proj), -tau, half_width=3.0, step=0.1)
    a1, a2 = np.meshgrid(grid.axis, grid.axis, indexing="ij")
    x = np.stack([2 * a1, 2 * a2], axis=-1)
    assert np.max(np.abs(math.pi * grid.values - click_probability(SinglePhotonProjector(eps), tau, x))) < 1e-6


# -- full runs -------------------------------------------------------------------

def circuit_and_verdict(*args, **kw):
    c = CircuitSpec(*args, **kw)
    return c, analyze(c)


def test_zero_records():
    c, v = circuit_and_verdict(1, [Coherent(0)], [], [HET])
    assert len(run_sampling(c, v, 0, 1)) == 0


def test_deterministic_and_thread_independent():
    c, v = circuit_and_verdict(2, [SqueezedVacuum(0.2), Coherent(1)],
                               [BeamSplitter(0, 1, 0.5), Loss(1, 0.8)], [HET, HET])
    a = run_sampling(c, v, 500, 42)
    b = run_sampling(c, v, 500, 42, threads=3)
    assert np.array_equal(a.points, b.points) and np.array_equal(a.outcomes, b.outcomes)
    # record i does not depend on n
    head = run_sampling(c, v, 100, 42)
    assert np.array_equal(head.outcomes, a.outcomes[:100])
    assert not np.array_equal(run_sampling(c, v, 100, 43).outcomes, head.outcomes)


def test_record_shapes():
    c, v = circuit_and_verdict(1, [Coherent(0.3)], [Squeeze(0, 0.1), Loss(0, 0.9)], [HET])
    rec = run_sampling(c, v, 3, 0).record(2)
    assert len(rec.phase_points) == 3
    assert len(rec.outcome) == 1 and len(rec.outcome[0]) == 2


def test_coherent_identity_circuit():
    c, v = circuit_and_verdict(1, [Coherent(0.5 + 0.25j)], [], [HET])
    out = run_sampling(c, v, 100000, 7).outcomes[:, 0]
    assert np.allclose(out.mean(axis=0), [1.0, 0.5], atol=0.02)
    assert np.allclose(np.cov(out.T), 2 * np.eye(2), atol=0.04)


def test_squeezed_heterodyne_covariance():
    c, v = circuit_and_verdict(1, [Coherent(0)], [Squeeze(0, 0.2)], [HET])
    out = run_sampling(c, v, 100000, 8).outcomes[:, 0]
    target = np.diag([math.exp(-0.4) + 1, math.exp(0.4) + 1])
    assert np.allclose(np.diag(np.cov(out.T)), np.diag(target), rtol=0.02)
    assert abs(np.cov(out.T)[0, 1]) < 0.02


def test_on_off_click_rate_matches_oracle():
    c, v = circuit_and_verdict(1, [Coherent(1.0)], [PhaseShift(0, 0.3)], [IdealOnOff()])
    clicks = run_sampling(c, v, 40000, 9).outcomes[:, 0, 0]
    p = fock.born_probabilities(c).discrete[(1,)]
    assert p == pytest.approx(1 - math.exp(-1), abs=1e-8)
    assert abs(clicks.mean() - p) < 4 * math.sqrt(p * (1 - p) / len(clicks))


def test_single_photon_click_rate_matches_oracle():
    c, v = circuit_and_verdict(1, [Thermal(0.5)], [Loss(0, 0.5)], [SinglePhotonProjector(0.5)])
    assert v.simulable
    clicks = run_sampling(c, v, 40000, 10).outcomes[:, 0, 0]
    p = fock.born_probabilities(c, dims=30).discrete[(1,)]
    assert abs(clicks.mean() - p) < 4 * math.sqrt(p * (1 - p) / len(clicks))


def test_unsupported_circuits():
    with pytest.raises(UnsupportedCircuitError):
        check_supported(CircuitSpec(1, [Fock(1)], [], [HET]))
    with pytest.raises(UnsupportedCircuitError):
        check_supported(CircuitSpec(1, [Coherent(0)], [CubicPhase(0, 1.0)], [HET]))
    check_supported(CircuitSpec(1, [Fock(0)], [Squeeze(0, 0.1)], [HET]))


def test_failed_verdict_rejected():
    c, v = circuit_and_verdict(1, [SqueezedVacuum(0.3)], [], [IdealOnOff()])
    with pytest.raises(ValueError):
        run_sampling(c, v, 10, 0)


def test_kernel_hook_applies():
    c, v = circuit_and_verdict(1, [Coherent(0)], [Loss(0, 0.5)], [HET])

    def shift(i, k):
        return GaussianKernel(k.modes, k.A, k.b + 5.0, k.cov)

    out = run_sampling(c, v, 2000, 1, kernel_hook=shift).outcomes[:, 0]
    assert np.allclose(out.mean(axis=0), 5.0, atol=0.2)
