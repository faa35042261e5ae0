"""Classical simulability analysis and sampling for optical circuits via (s)-ordered quasiprobabilities."""

__version__ = "0.1.0"

from .analyzer import NotRescuableError, Verdict, analyze, detector_threshold, loss_tolerance, slack_report
from .circuit import CircuitSpec, Heterodyne, IdealOnOff, SinglePhotonProjector
from .gates import (
    BSPolicy,
    BeamSplitter,
    CubicPhase,
    Displace,
    Loss,
    PhaseShift,
    PhotonSubtraction,
    RuleOutcome,
    Squeeze,
    apply_rule,
)
from .phasespace import Coherent, Fock, SqueezedVacuum, Thermal, depth_of_state
from .sampler import kernel_for_gate, run_sampling

__all__ = [
    "BSPolicy", "BeamSplitter", "CircuitSpec", "Coherent", "CubicPhase", "Displace", "Fock", "Heterodyne",
    "IdealOnOff", "Loss", "NotRescuableError", "PhaseShift", "PhotonSubtraction", "RuleOutcome",
    "SinglePhotonProjector", "Squeeze", "SqueezedVacuum", "Thermal", "Verdict", "analyze", "apply_rule",
    "depth_of_state", "detector_threshold", "kernel_for_gate", "loss_tolerance", "run_sampling", "slack_report",
]
