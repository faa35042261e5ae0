import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qpdsim import fock
from qpdsim.analyzer import (
    NotRescuableError,
    analyze,
    brute_force_feasible,
    detector_threshold,
    loss_tolerance,
    slack_report,
)
from qpdsim.circuit import CircuitSpec, Heterodyne, IdealOnOff, SinglePhotonProjector
from qpdsim.gates import (
    BeamSplitter,
    BSPolicy,
    CubicPhase,
    Displace,
    Loss,
    PhaseShift,
    PhotonSubtraction,
    Squeeze,
    apply_rule,
)
from qpdsim.phasespace import Coherent, Fock, SqueezedVacuum, Thermal

HET = Heterodyne()


def one_mode(state, layers, det=HET):
    return CircuitSpec(1, [state], layers, [det])


# -- detector thresholds -------------------------------------------------------

def test_detector_thresholds():
    assert detector_threshold(HET) == -1
    assert detector_threshold(IdealOnOff()) == 1
    assert detector_threshold(SinglePhotonProjector(0.0)) == 1
    assert detector_threshold(SinglePhotonProjector(0.3)) == pytest.approx(0.7)


@pytest.mark.parametrize("eps", [0.0, 0.3, 0.6])
def test_single_photon_threshold_from_oracle(eps):
    # the element's (-s) function is positive iff -s <= its own depth
    proj = fock.click_operator(SinglePhotonProjector(eps), 30)
    element = fock.TruncatedState((30,), proj / np.trace(proj).real)
    depth = fock.depth_scan(element, resolution=1e-3)
    assert -depth == pytest.approx(detector_threshold(SinglePhotonProjector(eps)), abs=5e-3)


def test_on_off_click_element_negative_below_one():
    # W^(t) of 1 - |0><0| is 1/pi - 2/(pi(1 - t)) exp(...), at the origin 1/pi (1 - 2/(1 - t))
    vac = fock.quasi_pdf(fock.prepare_state([Coherent(0)], 10), -0.9)
    k = len(vac.axis) // 2
    assert 1 / math.pi - vac.values[k, k] < 0
    # the no-click element (vacuum projector) is positive at every t <= 0.9
    assert vac.values.min() >= -1e-12


# -- analyze --------------------------------------------------------------------

def test_squeeze_then_loss_example():
    v = analyze(one_mode(Coherent(0.5), [Squeeze(0, 0.3), Loss(0, 0.5)]))
    assert v.simulable
    e = math.exp(-0.6)
    assert np.allclose([t[0] for t in v.tau_trace], [1, e, 1 - 0.5 * (1 - e)], atol=1e-12)
    assert v.slacks[-1] == (2, pytest.approx(1 - 0.5 * (1 - e) + 1))


def test_fock_squeeze_fails_at_layer_zero():
    v = analyze(one_mode(Fock(1), [Squeeze(0, 0.3)]))
    assert not v.simulable
    assert v.failure.layer_index == 0
    assert v.failure.gate == Squeeze(0, 0.3)
    assert v.tau_trace == ((-1.0,),)
    assert slack_report(one_mode(Fock(1), [Squeeze(0, 0.3)]))[-1][1] < 0


def test_empty_circuit_heterodyne():
    for state in (Fock(3), Coherent(1), SqueezedVacuum(0.4)):
        assert analyze(one_mode(state, [])).simulable


def test_detector_failure_index():
    c = one_mode(SqueezedVacuum(0.2), [Squeeze(0, 0.1)], IdealOnOff())
    v = analyze(c)
    assert not v.simulable
    assert v.failure.layer_index == 1 and v.failure.gate is None
    assert v.slacks[-1][1] < 0


def test_thermal_passes_on_off():
    assert analyze(one_mode(Thermal(0.5), [Loss(0, 0.5)], IdealOnOff())).simulable


def test_identity_slacks():
    c = one_mode(SqueezedVacuum(0.3), [PhaseShift(0, 0.2), Displace(0, 1j)])
    tau = math.exp(-0.6)
    rep = slack_report(c)
    assert [s for _, s in rep[:-1]] == [pytest.approx(tau + 1)] * 2
    assert rep[-1] == (2, pytest.approx(tau + 1))


def test_policy_recorded_and_used():
    c = CircuitSpec(2, [SqueezedVacuum(0.2), Coherent(0)], [BeamSplitter(0, 1, 0.4)], [HET, HET],
                    policy="greedy-a")
    v = analyze(c)
    assert v.policy == BSPolicy("greedy-a")
    assert analyze(c, "balanced").policy == BSPolicy("balanced")
    assert v.tau_trace[-1] != analyze(c, "balanced").tau_trace[-1]


def test_two_mode_balanced_example():
    c = CircuitSpec(2, [Coherent(0), Fock(1)], [BeamSplitter(0, 1, math.pi / 4)], [HET, HET])
    v = analyze(c)
    assert v.simulable
    assert v.tau_trace[-1] == pytest.approx((-1.0, -1.0))


def test_trace_replays():
    c = CircuitSpec(
        2,
        [SqueezedVacuum(0.3), Thermal(0.2)],
        [Squeeze(0, 0.2), BeamSplitter(0, 1, 0.4), Loss(1, 0.7), PhotonSubtraction(0, kappa=0.3)],
        [HET, HET],
    )
    v = analyze(c)
    for i, gate in enumerate(c.layers[: len(v.tau_trace) - 1]):
        before, after = v.tau_trace[i], v.tau_trace[i + 1]
        res = apply_rule(gate, [before[m] for m in gate.modes], v.policy, c.s_max)
        expected = list(before)
        for m, val in zip(gate.modes, res.max_output):
            expected[m] = val
        assert tuple(expected) == after
        for m in set(range(2)) - set(gate.modes):
            assert before[m] == after[m]


def test_deterministic():
    c = one_mode(Coherent(0), [Squeeze(0, 0.4), CubicPhase(0, 2.0)])
    assert analyze(c) == analyze(c)


# -- properties -----------------------------------------------------------------

single_gates = st.one_of(
    st.builds(Squeeze, st.just(0), st.floats(-0.6, 0.6)),
    st.builds(Loss, st.just(0), st.floats(0, 1)),
    st.builds(PhaseShift, st.just(0), st.floats(-3, 3)),
    st.builds(lambda k: PhotonSubtraction(0, kappa=k), st.floats(0, 1.2)),
)
inputs = st.one_of(
    st.builds(Fock, st.integers(0, 3)),
    st.builds(SqueezedVacuum, st.floats(0, 0.8)),
    st.builds(Thermal, st.floats(0, 1)),
)
detectors = st.sampled_from([HET, IdealOnOff(), SinglePhotonProjector(0.5)])


@settings(max_examples=60, deadline=None)
@given(inputs, st.lists(single_gates, min_size=1, max_size=3), detectors)
def test_greedy_optimal_on_single_mode_chains(state, layers, det):
    c = one_mode(state, layers, det)
    if not analyze(c).simulable:
        assert not brute_force_feasible(c)


@settings(max_examples=60, deadline=None)
@given(inputs, st.lists(single_gates, max_size=3), detectors, st.data())
def test_commuting_gates_keep_verdict(state, layers, det, data):
    c = one_mode(state, layers, det)
    pos = data.draw(st.integers(0, len(layers)))
    extra = data.draw(st.sampled_from([PhaseShift(0, 0.7), Displace(0, 0.3 - 0.2j)]))
    assert analyze(c).outcome == analyze(c.with_layers(layers[:pos] + [extra] + layers[pos:])).outcome


# -- loss tolerance --------------------------------------------------------------

def test_loss_tolerance_fock_squeeze():
    c = one_mode(Fock(1), [Squeeze(0, 0.3)])
    eta_max = (1 + math.exp(-0.6)) / 2
    assert loss_tolerance(c, 0) == pytest.approx(1 - eta_max, abs=1e-3)


def test_loss_tolerance_simulable_is_zero():
    assert loss_tolerance(one_mode(Coherent(0), [Squeeze(0, 0.3)]), 0) == 0.0


def test_loss_tolerance_not_rescuable():
    c = one_mode(Coherent(0), [CubicPhase(0, 8.0)], SinglePhotonProjector(0.0))
    with pytest.raises(NotRescuableError):
        loss_tolerance(c, 0)


def test_loss_tolerance_bad_index():
    with pytest.raises(ValueError):
        loss_tolerance(one_mode(Fock(1), [Squeeze(0, 0.3)]), 5)


def test_loss_tolerance_two_modes():
    c = CircuitSpec(2, [Fock(1), Fock(1)], [Squeeze(0, 0.2), Squeeze(1, 0.4)], [HET, HET])
    # the stronger squeezer on mode 1 sets the requirement when loss hits both modes
    assert loss_tolerance(c, 0) == pytest.approx((1 - math.exp(-0.8)) / 2, abs=1e-3)
    with pytest.raises(NotRescuableError):
        loss_tolerance(c, 0, mode=0)
    assert loss_tolerance(c.with_layers([Squeeze(1, 0.4)]), 0, mode=1) == pytest.approx(
        (1 - math.exp(-0.8)) / 2, abs=1e-3)
