"""Forward propagation of ordering parameters through a circuit.

Each layer holds one gate.  The analyzer starts from the depths of the
inputs, asks the gate rule for the largest admissible output ordering of the
touched modes, carries the other modes unchanged, and finally checks every
mode against the threshold its detector needs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .circuit import CircuitSpec, DetectorSpec, Heterodyne, IdealOnOff, SinglePhotonProjector
from .gates import BALANCED, BSPolicy, GateSpec, Loss, RuleOutcome, apply_rule
from .phasespace import depth_of_state

SIMULABLE = "Simulable"
FAILED = "Failed"
THRESHOLD_TOL = 1e-12  # float slack on the detector check, as in the gate rules


class NotRescuableError(RuntimeError):
    """No amount of inserted loss makes the circuit simulable."""


def detector_threshold(detector: DetectorSpec) -> float:
    """Smallest final ordering for which every POVM element pairs positively.

    Heterodyne needs -1, the on/off detector 1 (its click element dips below
    zero at the origin otherwise), and a single-photon projector blurred by
    quadrature noise ``epsilon`` needs ``1 - epsilon``.
    """
    if isinstance(detector, Heterodyne):
        return -1.0
    if isinstance(detector, IdealOnOff):
        return 1.0
    if isinstance(detector, SinglePhotonProjector):
        return 1.0 - detector.epsilon
    raise TypeError(f"unknown detector {detector!r}")


@dataclass(frozen=True)
class Failure:
    layer_index: int  # len(layers) means the detector check
    gate: Optional[GateSpec]
    reason: str


@dataclass(frozen=True)
class Verdict:
    """Outcome of :func:`analyze`.

    ``tau_trace[i]`` holds the per-mode orderings before layer ``i``; the last
    entry is the final ordering checked against the detectors.  For a failed
    circuit the trace stops at the last feasible boundary.
    """

    outcome: str
    tau_trace: tuple
    policy: BSPolicy
    failure: Optional[Failure] = None
    outcomes: tuple = field(default=(), compare=False)
    slacks: tuple = ()

    @property
    def simulable(self) -> bool:
        return self.outcome == SIMULABLE


def _policy(circuit: CircuitSpec, policy: BSPolicy | str | None) -> BSPolicy:
    if policy is None:
        policy = circuit.policy
    if policy is None:
        return BALANCED
    if isinstance(policy, str):
        return BSPolicy.parse(policy)
    return policy


def analyze(circuit: CircuitSpec, policy: BSPolicy | str | None = None) -> Verdict:
    """Greedy layer-by-layer maximisation of the ordering parameters.

    Parameters
    ----------
    circuit : CircuitSpec
    policy : BSPolicy or str, optional
        Beam-splitter policy; defaults to the circuit's own, then Balanced.

    Returns
    -------
    Verdict
        ``slacks`` holds one ``(layer_index, slack)`` pair per visited layer,
        plus one for the detector check at ``layer_index = len(layers)``.
    """
    pol = _policy(circuit, policy)
    tau = [depth_of_state(st, circuit.s_max) for st in circuit.inputs]
    trace = [tuple(tau)]
    outcomes, slacks = [], []
    for i, gate in enumerate(circuit.layers):
        res: RuleOutcome = apply_rule(gate, [tau[m] for m in gate.modes], pol, circuit.s_max)
        outcomes.append(res)
        slacks.append((i, res.slack))
        if not res.feasible:
            fail = Failure(i, gate, res.reason or "infeasible")
            return Verdict(FAILED, tuple(trace), pol, fail, tuple(outcomes), tuple(slacks))
        for m, v in zip(gate.modes, res.max_output):
            tau[m] = v
        trace.append(tuple(tau))

    margins = [t - detector_threshold(d) for t, d in zip(tau, circuit.detectors)]
    k = len(circuit.layers)
    slacks.append((k, min(margins)))
    worst = min(range(len(margins)), key=margins.__getitem__)
    if margins[worst] < -THRESHOLD_TOL:
        d = circuit.detectors[worst]
        reason = (f"mode {worst}: final ordering {tau[worst]:.6g} below the "
                  f"{type(d).__name__} threshold {detector_threshold(d):.6g}")
        return Verdict(FAILED, tuple(trace), pol, Failure(k, None, reason), tuple(outcomes), tuple(slacks))
    return Verdict(SIMULABLE, tuple(trace), pol, None, tuple(outcomes), tuple(slacks))


def slack_report(circuit: CircuitSpec, policy: BSPolicy | str | None = None) -> list[tuple[int, float]]:
    """Per-layer distance of the chosen output from its feasibility boundary.

    Gate layers report ``min(output) + 1``; the detector entry (index
    ``len(layers)``) reports ``min(tau_final - threshold)``.  A failed circuit
    is reported up to and including the failing layer, whose slack is negative.
    """
    return list(analyze(circuit, policy).slacks)


def _with_loss(circuit: CircuitSpec, layer_index: int, eta: float, modes: Sequence[int]) -> CircuitSpec:
    layers = list(circuit.layers)
    layers[layer_index:layer_index] = [Loss(m, eta) for m in modes]
    return circuit.with_layers(layers)


def loss_tolerance(
    circuit: CircuitSpec,
    layer_index: int,
    policy: BSPolicy | str | None = None,
    mode: Optional[int] = None,
    resolution: float = 1e-3,
) -> float:
    """Smallest loss ``1 - eta`` inserted before ``layer_index`` that makes the circuit simulable.

    The loss acts on ``mode``, or on every mode when ``mode`` is None.  The
    verdict is monotone in eta (lower transmission raises every ordering), so
    eta is bisected on [0, 1].  The returned deficit is the feasible end of
    the final bracket, so it errs on the safe side by at most ``resolution``.

    Raises
    ------
    ValueError
        If ``layer_index`` is outside ``0..len(layers)``.
    NotRescuableError
        If even complete loss leaves the circuit failed.
    """
    if not 0 <= layer_index <= len(circuit.layers):
        raise ValueError(f"layer index {layer_index} outside 0..{len(circuit.layers)}")
    if mode is not None and not 0 <= mode < circuit.mode_count:
        raise ValueError(f"mode {mode} out of range")
    if analyze(circuit, policy).simulable:
        return 0.0
    modes = range(circuit.mode_count) if mode is None else [mode]

    def ok(eta: float) -> bool:
        return analyze(_with_loss(circuit, layer_index, eta, modes), policy).simulable

    if not ok(0.0):
        raise NotRescuableError("circuit fails even with complete loss inserted")
    lo, hi = 0.0, 1.0  # ok(lo), not ok(hi)
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return 1.0 - lo


def chain_feasible(circuit: CircuitSpec, orderings: Sequence[float]) -> bool:
    """Check a hand-picked single-mode ordering per layer boundary.

    ``orderings[i]`` is the ordering after layer ``i``.  Each step must not
    exceed what the rule allows from the previous value (lowering an ordering
    is always admissible by Gaussian smoothing), and the last must meet the
    detector threshold.
    """
    if circuit.mode_count != 1:
        raise ValueError("brute-force chains are single-mode")
    s = depth_of_state(circuit.inputs[0], circuit.s_max)
    for gate, target in zip(circuit.layers, orderings):
        if target < -1:
            return False
        res = apply_rule(gate, [s], BALANCED, circuit.s_max)
        if not res.feasible or target > res.max_output[0] + 1e-12:
            return False
        s = target
    return s >= detector_threshold(circuit.detectors[0]) - THRESHOLD_TOL


def brute_force_feasible(circuit: CircuitSpec, grid: Sequence[float] | None = None) -> bool:
    """Exhaustive search over ordering assignments on a grid (single-mode chains)."""
    if grid is None:
        grid = [round(-1 + 0.1 * k, 10) for k in range(21)]
    for combo in itertools.product(grid, repeat=len(circuit.layers)):
        if chain_feasible(circuit, combo):
            return True
    return False if circuit.layers else chain_feasible(circuit, [])
