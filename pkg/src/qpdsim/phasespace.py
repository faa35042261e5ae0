"""Ordering parameters, input-state descriptions and their nonclassical depths.

Quadrature convention used across the package::

    q = a + a^dag,   p = -i (a - a^dag),   [q, p] = 2i

so the vacuum has quadrature covariance equal to the identity and a coherent
state |alpha> sits at (2 Re alpha, 2 Im alpha).  Phase-space vectors of an
M-mode system are laid out as ``[q_0, p_0, q_1, p_1, ...]``.

In these units the (s)-ordered representation of a Gaussian state with
covariance ``sigma`` is a Gaussian with covariance ``sigma - s * I``; the
largest admissible ``s`` is therefore the smallest eigenvalue of ``sigma``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

#: Default upper cap on ordering parameters.  Values above 1 only arise from
#: noisy (thermal-like) states and losses acting on them.
S_MAX_DEFAULT = 3.0
S_MIN = -1.0

OrderingParam = float
ModeOrdering = tuple  # tuple[float, ...], one entry per mode


def check_ordering(s: float, s_max: float = S_MAX_DEFAULT) -> float:
    """Validate an ordering parameter and return it as a float."""
    s = float(s)
    if not math.isfinite(s):
        raise ValueError(f"ordering parameter must be finite, got {s}")
    if s < S_MIN - 1e-12 or s > s_max + 1e-12:
        raise ValueError(f"ordering parameter {s} outside [-1, {s_max}]")
    return s


def mode_ordering(values: Sequence[float], s_max: float = S_MAX_DEFAULT) -> ModeOrdering:
    return tuple(check_ordering(v, s_max) for v in values)


@dataclass(frozen=True)
class Coherent:
    amplitude: complex = 0j


@dataclass(frozen=True)
class Thermal:
    mean_photons: float

    def __post_init__(self):
        if not (self.mean_photons >= 0 and math.isfinite(self.mean_photons)):
            raise ValueError("thermal mean photon number must be finite and >= 0")


@dataclass(frozen=True)
class SqueezedVacuum:
    """S(zeta)|0> with zeta = r exp(i phase); phase 0 squeezes q."""

    r: float
    phase: float = 0.0


@dataclass(frozen=True)
class Fock:
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 0:
            raise ValueError("Fock index must be a non-negative integer")


StateSpec = Union[Coherent, Thermal, SqueezedVacuum, Fock]


def rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def gaussian_moments(state: StateSpec) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature mean vector and covariance matrix of a Gaussian state.

    Fock(0) is accepted as the vacuum; higher Fock states raise ``ValueError``.
    """
    if isinstance(state, Coherent):
        a = complex(state.amplitude)
        return np.array([2 * a.real, 2 * a.imag]), np.eye(2)
    if isinstance(state, Thermal):
        return np.zeros(2), (2 * state.mean_photons + 1) * np.eye(2)
    if isinstance(state, SqueezedVacuum):
        rot = rotation(state.phase / 2)
        cov = rot @ np.diag([math.exp(-2 * state.r), math.exp(2 * state.r)]) @ rot.T
        return np.zeros(2), cov
    if isinstance(state, Fock):
        if state.n == 0:
            return np.zeros(2), np.eye(2)
        raise ValueError(f"Fock({state.n}) is not Gaussian")
    raise TypeError(f"unsupported state {state!r}")


def depth_of_state(state: StateSpec, s_max: float = S_MAX_DEFAULT) -> float:
    """Largest s for which the state's (s)-ordered function is a probability density.

    Delta-like limits (coherent states at s = 1, thermal states at
    s = 2n+1) count as densities.  The result is capped at ``s_max``.
    """
    if isinstance(state, Fock) and state.n > 0:
        return S_MIN
    if isinstance(state, Coherent) or (isinstance(state, Fock) and state.n == 0):
        return min(1.0, s_max)
    if isinstance(state, SqueezedVacuum):
        # closed form of the smallest covariance eigenvalue; phase only rotates
        return min(math.exp(-2 * abs(state.r)), s_max)
    if isinstance(state, Thermal):
        return min(2 * state.mean_photons + 1, s_max)
    raise TypeError(f"unsupported state {state!r}")


def nonclassical_depth(tau: float) -> float:
    """Convert a maximal ordering parameter into the depth (1 - tau) / 2."""
    return (1 - tau) / 2


def gaussian_smooth_relation(s_hi: float, s_lo: float) -> float:
    """Variance of the Gaussian kernel turning W^(s_hi) into W^(s_lo).

    The value is the mean squared displacement E|alpha - beta|^2 in the
    complex amplitude plane, (s_hi - s_lo) / 2.  In quadrature units each of
    q and p receives an extra variance of s_hi - s_lo.
    """
    if not s_lo < s_hi:
        raise ValueError(f"need s_lo < s_hi for a smoothing kernel, got {s_lo} >= {s_hi}")
    return (s_hi - s_lo) / 2
