"""Serializable analysis reports."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Optional

from . import __version__
from .analyzer import Verdict
from .circuit import CircuitSpec
from .circuitfile import circuit_hash, gate_to_dict


def _enc(x: float):
    # strict JSON has no infinities; the slack of a rule with no candidate is -inf
    return x if math.isfinite(x) else repr(x)


def _dec(x) -> float:
    return float(x)


@dataclass(frozen=True)
class ReportDocument:
    outcome: str
    policy: str
    tau_trace: tuple  # rows of per-mode orderings, one per layer boundary
    slacks: tuple  # (layer_index, slack) rows; the last index is the detector check
    failure: Optional[dict]  # {"layer_index", "gate", "reason"}
    tool_version: str
    input_hash: str

    @classmethod
    def from_verdict(cls, circuit: CircuitSpec, verdict: Verdict) -> "ReportDocument":
        failure = None
        if verdict.failure is not None:
            f = verdict.failure
            failure = {
                "layer_index": f.layer_index,
                "gate": gate_to_dict(f.gate) if f.gate is not None else None,
                "reason": f.reason,
            }
        return cls(
            verdict.outcome,
            str(verdict.policy),
            tuple(tuple(float(v) for v in row) for row in verdict.tau_trace),
            tuple((int(i), float(s)) for i, s in verdict.slacks),
            failure,
            __version__,
            circuit_hash(circuit),
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["tau_trace"] = [list(row) for row in self.tau_trace]
        d["slacks"] = [{"layer_index": i, "slack": _enc(s)} for i, s in self.slacks]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ReportDocument":
        return cls(
            d["outcome"],
            d["policy"],
            tuple(tuple(float(v) for v in row) for row in d["tau_trace"]),
            tuple((int(r["layer_index"]), _dec(r["slack"])) for r in d["slacks"]),
            d["failure"],
            d["tool_version"],
            d["input_hash"],
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ReportDocument":
        return cls.from_dict(json.loads(text))

    def summary(self) -> str:
        lines = [f"verdict: {self.outcome} (policy {self.policy})"]
        for i, row in enumerate(self.tau_trace):
            lines.append(f"  tau[{i}] = " + ", ".join(f"{v:.6g}" for v in row))
        for i, s in self.slacks:
            lines.append(f"  slack[{i}] = {s:.6g}")
        if self.failure:
            lines.append(f"  failed at layer {self.failure['layer_index']}: {self.failure['reason']}")
        return "\n".join(lines)
