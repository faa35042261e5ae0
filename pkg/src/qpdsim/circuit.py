"""Circuit and detector descriptions shared by the analyzer, sampler and oracle."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

from .gates import GateSpec
from .phasespace import S_MAX_DEFAULT, StateSpec


@dataclass(frozen=True)
class Heterodyne:
    """Coherent-state projections |beta><beta| / pi; outcome reported in quadrature units."""


@dataclass(frozen=True)
class IdealOnOff:
    """Click / no-click detector; no-click is the vacuum projector."""


@dataclass(frozen=True)
class SinglePhotonProjector:
    """Heralds the single-photon element {Pi_1, 1 - Pi_1}.

    ``epsilon = 0`` is the ideal projector |1><1|.  For ``epsilon > 0`` the
    element is |1><1| after additive Gaussian noise of quadrature variance
    ``epsilon``, whose phase-space functions are those of |1><1| smoothed by
    ``epsilon`` in ordering.
    """

    epsilon: float = 0.0

    def __post_init__(self):
        if not 0 <= self.epsilon < 2:
            raise ValueError("detector epsilon must lie in [0, 2)")


DetectorSpec = Union[Heterodyne, IdealOnOff, SinglePhotonProjector]


@dataclass(frozen=True)
class CircuitSpec:
    """Factorised inputs, one gate per layer, factorised detectors."""

    mode_count: int
    inputs: tuple
    layers: tuple
    detectors: tuple
    s_max: float = S_MAX_DEFAULT
    policy: Optional[str] = None

    def __init__(
        self,
        mode_count: int,
        inputs: Sequence[StateSpec],
        layers: Sequence[GateSpec],
        detectors: Sequence[DetectorSpec],
        s_max: float = S_MAX_DEFAULT,
        policy: Optional[str] = None,
    ):
        object.__setattr__(self, "mode_count", int(mode_count))
        object.__setattr__(self, "inputs", tuple(inputs))
        object.__setattr__(self, "layers", tuple(layers))
        object.__setattr__(self, "detectors", tuple(detectors))
        object.__setattr__(self, "s_max", float(s_max))
        object.__setattr__(self, "policy", policy)
        self._validate()

    def _validate(self):
        if self.mode_count < 1:
            raise ValueError("a circuit needs at least one mode")
        if len(self.inputs) != self.mode_count:
            raise ValueError(f"expected {self.mode_count} inputs, got {len(self.inputs)}")
        if len(self.detectors) != self.mode_count:
            raise ValueError(f"expected {self.mode_count} detectors, got {len(self.detectors)}")
        if self.s_max < 1:
            raise ValueError("s_max must be at least 1")
        for i, gate in enumerate(self.layers):
            for m in gate.modes:
                if not 0 <= m < self.mode_count:
                    raise ValueError(f"layer {i}: mode {m} out of range for {self.mode_count} modes")

    def with_layers(self, layers: Sequence[GateSpec]) -> "CircuitSpec":
        return CircuitSpec(self.mode_count, self.inputs, layers, self.detectors, self.s_max, self.policy)
