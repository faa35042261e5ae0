"""Monte-Carlo sampling through positive Gaussian transfer kernels.

A point is drawn from the (tau_1)-ordered function of the inputs, carried
through one Gaussian kernel per layer, and the detectors are sampled from
the weights their POVM elements assign to the final point.  Quadrature units
throughout: the vacuum has covariance I, and a Gaussian state with
covariance sigma has (s)-ordered covariance sigma - s I.

Every record owns a random stream derived from ``(seed, record_index)``, so
results do not depend on how records are split across threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .analyzer import Verdict, detector_threshold
from .circuit import CircuitSpec, DetectorSpec, Heterodyne, IdealOnOff, SinglePhotonProjector
from .gates import BeamSplitter, Displace, GateSpec, Loss, PhaseShift, Squeeze
from .phasespace import Fock, StateSpec, gaussian_moments, rotation

PSD_TOL = 1e-10


class UnsupportedCircuitError(ValueError):
    """The circuit is analyzable but has no Gaussian sampling path."""


@dataclass(frozen=True)
class GaussianKernel:
    """y = A x + b + N(0, cov) on the quadratures of ``modes``.

    ``cov`` may be singular; an all-zero covariance is a deterministic map.
    """

    modes: tuple
    A: np.ndarray
    b: np.ndarray
    cov: np.ndarray

    @property
    def deterministic(self) -> bool:
        return not np.any(self.cov)

    def noise_factor(self) -> np.ndarray:
        """Matrix F with F F^T = cov, built from the clipped eigen-decomposition."""
        if self.deterministic:
            return np.zeros_like(self.cov)
        w, v = np.linalg.eigh(self.cov)
        return v * np.sqrt(np.clip(w, 0, None))

    def then(self, other: "GaussianKernel") -> "GaussianKernel":
        """Kernel of applying ``self`` first and ``other`` second (same modes)."""
        if other.modes != self.modes:
            raise ValueError("fusion needs kernels on the same modes")
        A = other.A @ self.A
        b = other.A @ self.b + other.b
        cov = other.A @ self.cov @ other.A.T + other.cov
        return GaussianKernel(self.modes, A, b, cov)

    def density(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Kernel density of landing at ``y`` from ``x`` (full-rank covariance only)."""
        diff = np.atleast_2d(y) - (self.A @ np.asarray(x) + self.b)
        inv = np.linalg.inv(self.cov)
        k = len(self.b)
        norm = 1 / math.sqrt((2 * math.pi) ** k * np.linalg.det(self.cov))
        return norm * np.exp(-0.5 * np.einsum("ni,ij,nj->n", diff, inv, diff))


def _quad(values: Sequence[float]) -> np.ndarray:
    return np.repeat(np.asarray(values, float), 2)


def _gate_action(gate: GateSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Mean map (A, b) and added noise Y of the gate on its own quadratures."""
    if isinstance(gate, Displace):
        a = complex(gate.amplitude)
        return np.eye(2), np.array([2 * a.real, 2 * a.imag]), np.zeros((2, 2))
    if isinstance(gate, PhaseShift):
        return rotation(gate.angle), np.zeros(2), np.zeros((2, 2))
    if isinstance(gate, Squeeze):
        return np.diag([math.exp(-gate.r), math.exp(gate.r)]), np.zeros(2), np.zeros((2, 2))
    if isinstance(gate, Loss):
        return math.sqrt(gate.eta) * np.eye(2), np.zeros(2), (1 - gate.eta) * np.eye(2)
    if isinstance(gate, BeamSplitter):
        c, s = math.cos(gate.theta), math.sin(gate.theta)
        L = np.array([[c, s], [-s, c]])
        return np.kron(L, np.eye(2)), np.zeros(4), np.zeros((4, 4))
    raise UnsupportedCircuitError(f"no positive Gaussian kernel for {type(gate).__name__}")


def kernel_for_gate(gate: GateSpec, s_in: Sequence[float], s_out: Sequence[float]) -> GaussianKernel:
    """Positive Gaussian transfer kernel from ordering ``s_in`` to ``s_out``.

    Pushing N(mu, sigma - S_in) through y = A x + b + N(0, K) must give the
    output state's N(A mu + b, A sigma A^T + Y - S_out), which fixes

        K = Y + A S_in A^T - S_out,

    independent of the state.  The pair is feasible exactly when K is
    positive semidefinite.

    Raises
    ------
    UnsupportedCircuitError
        For cubic-phase and photon-subtraction gates.
    ValueError
        If ``(s_in, s_out)`` is infeasible for the gate.
    """
    A, b, Y = _gate_action(gate)
    s_in, s_out = list(s_in), list(s_out)
    if len(s_in) != len(gate.modes) or len(s_out) != len(gate.modes):
        raise ValueError("one ordering per gate mode expected")
    cov = Y + A @ np.diag(_quad(s_in)) @ A.T - np.diag(_quad(s_out))
    cov = 0.5 * (cov + cov.T)
    cov[np.abs(cov) < 1e-14] = 0.0
    lam = np.linalg.eigvalsh(cov).min()
    if lam < -PSD_TOL:
        raise ValueError(f"orderings {s_in} -> {s_out} infeasible for {gate!r} (min eigenvalue {lam:.3g})")
    return GaussianKernel(tuple(gate.modes), A, b, cov)


def _check_input(state: StateSpec) -> None:
    if isinstance(state, Fock) and state.n > 0:
        raise UnsupportedCircuitError("Fock inputs have no Gaussian positive representation")


def input_distribution(states: Sequence[StateSpec], tau: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """Mean and covariance of the (tau)-ordered function of a product of Gaussian inputs."""
    means, covs = [], []
    for st, t in zip(states, tau):
        _check_input(st)
        mu, sigma = gaussian_moments(st)
        cov = sigma - t * np.eye(2)
        if np.linalg.eigvalsh(cov).min() < -PSD_TOL:
            raise ValueError(f"ordering {t:g} exceeds the depth of {st!r}")
        means.append(mu)
        covs.append(cov)
    n = len(means)
    full = np.zeros((2 * n, 2 * n))
    for i, c in enumerate(covs):
        full[2 * i:2 * i + 2, 2 * i:2 * i + 2] = c
    return np.concatenate(means), full


def _factor(cov: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(cov)
    return v * np.sqrt(np.clip(w, 0, None))


def sample_input(states: Sequence[StateSpec], tau: Sequence[float], rng: np.random.Generator) -> np.ndarray:
    """One point [q0, p0, q1, p1, ...] from the (tau)-ordered input function."""
    mu, cov = input_distribution(states, tau)
    return mu + _factor(cov) @ rng.standard_normal(len(mu))


def no_click_weight(u: float | np.ndarray, r2: np.ndarray) -> np.ndarray:
    """pi W^(-tau) of the vacuum projector at squared quadrature radius r2, u = 1 + tau."""
    return (2 / u) * np.exp(-r2 / (2 * u))


def single_photon_weight(u: float | np.ndarray, r2: np.ndarray) -> np.ndarray:
    """pi W^(-tau - eps) of |1><1| at squared quadrature radius r2, u = 1 + tau + eps."""
    return (2 / u) * np.exp(-r2 / (2 * u)) * (r2 / u**2 - (2 - u) / u)


def click_probability(detector: DetectorSpec, tau_final: float, point: np.ndarray) -> np.ndarray:
    """Weight of the click outcome at phase-space point(s) ``point[..., 2]``."""
    point = np.asarray(point, float)
    r2 = np.sum(point**2, axis=-1)
    if isinstance(detector, IdealOnOff):
        return 1 - no_click_weight(1 + tau_final, r2)
    if isinstance(detector, SinglePhotonProjector):
        return single_photon_weight(1 + tau_final + detector.epsilon, r2)
    raise TypeError(f"{detector!r} is not a discrete detector")


def _check_detector(detector: DetectorSpec, tau_final: float) -> None:
    thr = detector_threshold(detector)
    if tau_final < thr - 1e-12:
        raise ValueError(f"final ordering {tau_final:g} below the {type(detector).__name__} threshold {thr:g}")


def sample_measurement(detector: DetectorSpec, tau_final: float, point: np.ndarray,
                       rng: np.random.Generator) -> np.ndarray:
    """Outcome for one mode: (q, p) for heterodyne, (click,) for on/off detectors.

    Heterodyne outcomes are the point plus N(0, (1 + tau) I); with the
    (tau)-ordered covariance sigma - tau I of the point this reproduces the
    Husimi covariance sigma + I.
    """
    _check_detector(detector, tau_final)
    point = np.asarray(point, float)
    if isinstance(detector, Heterodyne):
        return point + math.sqrt(max(1 + tau_final, 0.0)) * rng.standard_normal(2)
    p = float(np.clip(click_probability(detector, tau_final, point), 0, 1))
    return np.array([float(rng.random() < p)])


# -- full runs ------------------------------------------------------------------

@dataclass(frozen=True)
class SampleRecord:
    phase_points: tuple  # one quadrature vector per layer boundary
    outcome: tuple  # per mode: (q, p) or (click,)


@dataclass
class SampleSet:
    """Vectorised records.

    ``points[i, k]`` is the phase-space point of record ``i`` before layer
    ``k`` (the last index is the final point).  ``outcomes[i, m]`` holds the
    heterodyne pair of mode ``m``, or ``(click, nan)`` for discrete detectors.
    """

    points: np.ndarray
    outcomes: np.ndarray
    detectors: tuple

    def __len__(self) -> int:
        return self.points.shape[0]

    def record(self, i: int) -> SampleRecord:
        out = []
        for m, d in enumerate(self.detectors):
            row = self.outcomes[i, m]
            out.append((float(row[0]), float(row[1])) if isinstance(d, Heterodyne) else (int(row[0]),))
        return SampleRecord(tuple(p.copy() for p in self.points[i]), tuple(out))

    def records(self):
        return (self.record(i) for i in range(len(self)))


def check_supported(circuit: CircuitSpec) -> None:
    """Raise UnsupportedCircuitError for Fock inputs or non-Gaussian gates."""
    for st in circuit.inputs:
        _check_input(st)
    for gate in circuit.layers:
        _gate_action(gate)


def build_kernels(circuit: CircuitSpec, verdict: Verdict) -> list[GaussianKernel]:
    kernels = []
    for i, gate in enumerate(circuit.layers):
        before, after = verdict.tau_trace[i], verdict.tau_trace[i + 1]
        kernels.append(kernel_for_gate(gate, [before[m] for m in gate.modes], [after[m] for m in gate.modes]))
    return kernels


def _record_noise(seed: int, index: int, normals: int, uniforms: int):
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))
    return rng.standard_normal(normals), rng.random(uniforms)


def _draw_noise(seed: int, start: int, stop: int, normals: int, uniforms: int):
    z = np.empty((stop - start, normals))
    u = np.empty((stop - start, uniforms))
    for k, i in enumerate(range(start, stop)):
        z[k], u[k] = _record_noise(seed, i, normals, uniforms)
    return z, u


def run_sampling(
    circuit: CircuitSpec,
    verdict: Verdict,
    n: int,
    seed: int,
    threads: int = 1,
    kernel_hook: Optional[Callable[[int, GaussianKernel], GaussianKernel]] = None,
) -> SampleSet:
    """Draw ``n`` records of the hidden-variable simulation.

    Parameters
    ----------
    circuit, verdict
        The verdict must be Simulable for this circuit.
    n, seed
        Record ``i`` uses the stream ``SeedSequence(seed, spawn_key=(i,))``.
    threads
        Worker threads for drawing the per-record streams; the result does
        not depend on it.
    kernel_hook
        Test hook, ``hook(layer_index, kernel) -> kernel``, used to inject a
        corrupted kernel as a negative control.
    """
    if not verdict.simulable:
        raise ValueError("sampling needs a Simulable verdict")
    if n < 0:
        raise ValueError("n must be non-negative")
    check_supported(circuit)
    M, L = circuit.mode_count, len(circuit.layers)
    kernels = build_kernels(circuit, verdict)
    if kernel_hook is not None:
        kernels = [kernel_hook(i, k) for i, k in enumerate(kernels)]
    tau_final = verdict.tau_trace[-1]
    for d, t in zip(circuit.detectors, tau_final):
        _check_detector(d, t)
    mu, cov = input_distribution(circuit.inputs, verdict.tau_trace[0])

    widths = [2 * M] + [len(k.b) for k in kernels] + [2 * M]
    normals = sum(widths)
    if n == 0:
        return SampleSet(np.zeros((0, L + 1, 2 * M)), np.zeros((0, M, 2)), circuit.detectors)

    threads = max(1, int(threads))
    bounds = np.linspace(0, n, threads + 1).astype(int)
    if threads == 1:
        z, u = _draw_noise(seed, 0, n, normals, M)
    else:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(lambda ab: _draw_noise(seed, ab[0], ab[1], normals, M),
                                  zip(bounds[:-1], bounds[1:])))
        z = np.concatenate([p[0] for p in parts])
        u = np.concatenate([p[1] for p in parts])

    points = np.empty((n, L + 1, 2 * M))
    offset = 0
    x = mu + z[:, : 2 * M] @ _factor(cov).T
    offset += 2 * M
    points[:, 0] = x
    for k, kern in enumerate(kernels):
        idx = [q for m in kern.modes for q in (2 * m, 2 * m + 1)]
        w = len(idx)
        x = x.copy()
        x[:, idx] = x[:, idx] @ kern.A.T + kern.b + z[:, offset:offset + w] @ kern.noise_factor().T
        offset += w
        points[:, k + 1] = x

    outcomes = np.full((n, M, 2), np.nan)
    for m, d in enumerate(circuit.detectors):
        pt = x[:, 2 * m:2 * m + 2]
        if isinstance(d, Heterodyne):
            outcomes[:, m] = pt + math.sqrt(max(1 + tau_final[m], 0.0)) * z[:, offset + 2 * m:offset + 2 * m + 2]
        else:
            p = np.clip(click_probability(d, tau_final[m], pt), 0, 1)
            outcomes[:, m, 0] = (u[:, m] < p).astype(float)
    return SampleSet(points, outcomes, circuit.detectors)
