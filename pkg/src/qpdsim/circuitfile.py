"""JSON circuit files.

Example::

    {
      "modes": 1,
      "inputs": [{"type": "squeezed", "params": {"r": 0.2}}],
      "gates": [{"type": "loss", "modes": [0], "params": {"eta": 0.8}}],
      "detectors": [{"type": "heterodyne"}],
      "policy": "balanced"
    }

Complex amplitudes are written as a number or a ``[re, im]`` pair.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

import jsonschema

from .circuit import CircuitSpec, Heterodyne, IdealOnOff, SinglePhotonProjector
from .gates import BeamSplitter, BSPolicy, CubicPhase, Displace, Loss, PhaseShift, PhotonSubtraction, Squeeze
from .phasespace import Coherent, Fock, SqueezedVacuum, Thermal


class CircuitFileError(ValueError):
    """Malformed or invalid circuit file; the message names the line or field."""


_NUM = {"type": "number"}
_COMPLEX = {"oneOf": [_NUM, {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}]}


def _params(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


INPUT_PARAMS = {
    "coherent": _params({"amplitude": _COMPLEX}),
    "thermal": _params({"mean_photons": {"type": "number", "minimum": 0}}, ["mean_photons"]),
    "squeezed": _params({"r": _NUM, "phase": _NUM}, ["r"]),
    "fock": _params({"n": {"type": "integer", "minimum": 0}}, ["n"]),
}
GATE_PARAMS = {
    "displace": (1, _params({"amplitude": _COMPLEX}, ["amplitude"])),
    "phase": (1, _params({"angle": _NUM}, ["angle"])),
    "squeeze": (1, _params({"r": _NUM}, ["r"])),
    "beamsplitter": (2, _params({"theta": _NUM}, ["theta"])),
    "loss": (1, _params({"eta": {"type": "number", "minimum": 0, "maximum": 1}}, ["eta"])),
    "subtraction": (1, _params({"kappa": {"type": "number", "minimum": 0}, "theta": _NUM,
                                "epsilon": {"type": "number", "minimum": 0, "maximum": 2}})),
    "cubic": (1, _params({"gamma": {"type": "number", "exclusiveMinimum": 0},
                          "epsilon": {"type": "number", "exclusiveMinimum": 0}}, ["gamma"])),
}
DETECTOR_PARAMS = {
    "heterodyne": _params({}),
    "onoff": _params({}),
    "single_photon": _params({"epsilon": {"type": "number", "minimum": 0, "exclusiveMaximum": 2}}),
}


def _tagged(params: dict, extra: dict | None = None, required=("type",)) -> dict:
    props = {"type": {"enum": sorted(params)}, "params": {"type": "object"}}
    props.update(extra or {})
    return {
        "type": "object",
        "properties": props,
        "required": list(required),
        "additionalProperties": False,
        "allOf": [
            {"if": {"properties": {"type": {"const": name}}},
             "then": {"properties": {"params": schema}, "required": ["params"] if schema["required"] else []}}
            for name, schema in params.items()
        ],
    }


def _gate_item() -> dict:
    item = _tagged({k: v[1] for k, v in GATE_PARAMS.items()},
                   {"modes": {"type": "array", "items": {"type": "integer", "minimum": 0}}},
                   ("type", "modes", "params"))
    for name, (arity, _) in GATE_PARAMS.items():
        item["allOf"].append({"if": {"properties": {"type": {"const": name}}},
                              "then": {"properties": {"modes": {"minItems": arity, "maxItems": arity}}}})
    return item


SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "modes": {"type": "integer", "minimum": 1},
        "inputs": {"type": "array", "items": _tagged(INPUT_PARAMS)},
        "gates": {"type": "array", "items": _gate_item()},
        "detectors": {"type": "array", "items": _tagged(DETECTOR_PARAMS)},
        "policy": {"type": "string"},
        "s_max": {"type": "number", "minimum": 1},
    },
    "required": ["modes", "inputs", "gates", "detectors"],
    "additionalProperties": False,
}


def _field(path) -> str:
    out = ""
    for p in path:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out or "<root>"


def _reject_constant(name):
    raise ValueError(f"non-finite number {name} is not allowed")


def _complex(v) -> complex:
    return complex(v[0], v[1]) if isinstance(v, list) else complex(v)


def _input(d: dict):
    p = d.get("params", {})
    t = d["type"]
    if t == "coherent":
        return Coherent(_complex(p.get("amplitude", 0)))
    if t == "thermal":
        return Thermal(p["mean_photons"])
    if t == "squeezed":
        return SqueezedVacuum(p["r"], p.get("phase", 0.0))
    return Fock(p["n"])


def gate_from_dict(d: dict):
    p, m, t = d["params"], d["modes"], d["type"]
    if t == "displace":
        return Displace(m[0], _complex(p["amplitude"]))
    if t == "phase":
        return PhaseShift(m[0], p["angle"])
    if t == "squeeze":
        return Squeeze(m[0], p["r"])
    if t == "beamsplitter":
        return BeamSplitter(m[0], m[1], p["theta"])
    if t == "loss":
        return Loss(m[0], p["eta"])
    if t == "subtraction":
        return PhotonSubtraction(m[0], p.get("kappa"), p.get("theta"), p.get("epsilon"))
    return CubicPhase(m[0], p["gamma"], p.get("epsilon", 1e-2))


def _detector(d: dict):
    t = d["type"]
    if t == "heterodyne":
        return Heterodyne()
    if t == "onoff":
        return IdealOnOff()
    return SinglePhotonProjector(d.get("params", {}).get("epsilon", 0.0))


def from_dict(doc: dict) -> CircuitSpec:
    """Validate a decoded document and build the circuit.

    Raises
    ------
    CircuitFileError
        With the offending field path.
    """
    bad = _first_nonfinite(doc)
    if bad is not None:
        raise CircuitFileError(f"{_field(bad)}: physical parameters must be finite")
    errors = sorted(jsonschema.Draft202012Validator(SCHEMA).iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise CircuitFileError(f"{_field(e.absolute_path)}: {e.message}")
    built = {}
    for key, conv in (("inputs", _input), ("gates", gate_from_dict), ("detectors", _detector)):
        items = []
        for i, d in enumerate(doc[key]):
            try:
                items.append(conv(d))
            except (ValueError, TypeError) as exc:
                raise CircuitFileError(f"{key}[{i}]: {exc}") from None
        built[key] = items
    for i, d in enumerate(doc["gates"]):
        for m in d["modes"]:
            if m >= doc["modes"]:
                raise CircuitFileError(f"gates[{i}].modes: mode {m} out of range for {doc['modes']} modes")
    policy = doc.get("policy")
    if policy is not None:
        try:
            BSPolicy.parse(policy)
        except ValueError as exc:
            raise CircuitFileError(f"policy: {exc}") from None
    try:
        return CircuitSpec(doc["modes"], built["inputs"], built["gates"], built["detectors"],
                           doc.get("s_max", 3.0), policy)
    except ValueError as exc:
        raise CircuitFileError(str(exc)) from None


def loads(text: str) -> CircuitSpec:
    try:
        doc = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise CircuitFileError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    except ValueError as exc:
        raise CircuitFileError(str(exc)) from None
    return from_dict(doc)


def load(path: str | Path) -> CircuitSpec:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CircuitFileError(f"cannot read {path}: {exc.strerror}") from None
    return loads(text)


def _num(z: complex):
    z = complex(z)
    return z.real if z.imag == 0 else [z.real, z.imag]


def gate_to_dict(g) -> dict:
    if isinstance(g, Displace):
        return {"type": "displace", "modes": [g.mode], "params": {"amplitude": _num(g.amplitude)}}
    if isinstance(g, PhaseShift):
        return {"type": "phase", "modes": [g.mode], "params": {"angle": g.angle}}
    if isinstance(g, Squeeze):
        return {"type": "squeeze", "modes": [g.mode], "params": {"r": g.r}}
    if isinstance(g, BeamSplitter):
        return {"type": "beamsplitter", "modes": [g.mode_a, g.mode_b], "params": {"theta": g.theta}}
    if isinstance(g, Loss):
        return {"type": "loss", "modes": [g.mode], "params": {"eta": g.eta}}
    if isinstance(g, PhotonSubtraction):
        params = {"kappa": g.kappa} if g.kappa is not None else {"theta": g.theta, "epsilon": g.epsilon}
        return {"type": "subtraction", "modes": [g.mode], "params": params}
    return {"type": "cubic", "modes": [g.mode], "params": {"gamma": g.gamma, "epsilon": g.epsilon}}


def to_dict(c: CircuitSpec) -> dict:
    """Canonical document for ``c``; ``from_dict(to_dict(c)) == c``."""
    inputs = []
    for st in c.inputs:
        if isinstance(st, Coherent):
            inputs.append({"type": "coherent", "params": {"amplitude": _num(st.amplitude)}})
        elif isinstance(st, Thermal):
            inputs.append({"type": "thermal", "params": {"mean_photons": st.mean_photons}})
        elif isinstance(st, SqueezedVacuum):
            inputs.append({"type": "squeezed", "params": {"r": st.r, "phase": st.phase}})
        else:
            inputs.append({"type": "fock", "params": {"n": st.n}})
    gates = [gate_to_dict(g) for g in c.layers]
    detectors = []
    for d in c.detectors:
        if isinstance(d, Heterodyne):
            detectors.append({"type": "heterodyne"})
        elif isinstance(d, IdealOnOff):
            detectors.append({"type": "onoff"})
        else:
            detectors.append({"type": "single_photon", "params": {"epsilon": d.epsilon}})
    doc = {"modes": c.mode_count, "inputs": inputs, "gates": gates, "detectors": detectors, "s_max": c.s_max}
    if c.policy is not None:
        doc["policy"] = c.policy
    return doc


def dumps(c: CircuitSpec) -> str:
    return json.dumps(to_dict(c), indent=2, sort_keys=True) + "\n"


def circuit_hash(c: CircuitSpec) -> str:
    """sha256 of the canonical compact serialisation."""
    canon = json.dumps(to_dict(c), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def _first_nonfinite(doc, path=()):
    if isinstance(doc, float) and not math.isfinite(doc):
        return path
    items = doc.items() if isinstance(doc, dict) else enumerate(doc) if isinstance(doc, list) else ()
    for k, v in items:
        found = _first_nonfinite(v, path + (k,))
        if found is not None:
            return found
    return None
