"""Gate descriptions and the rules that propagate ordering parameters through them.

A gate maps a phase-space distribution at ordering ``s_in`` to one at
``s_out`` through a transfer function.  Each rule below returns the largest
``s_out`` for which that transfer function is a positive kernel, or reports
that none exists (the transfer function cannot avoid negativity and the
output sits below s = -1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .phasespace import S_MAX_DEFAULT, S_MIN

_TOL = 1e-12


@dataclass(frozen=True)
class Displace:
    mode: int
    amplitude: complex

    @property
    def modes(self):
        return (self.mode,)


@dataclass(frozen=True)
class PhaseShift:
    """U = exp(i phi n); rotates (q, p) counter-clockwise by phi."""

    mode: int
    angle: float

    @property
    def modes(self):
        return (self.mode,)


@dataclass(frozen=True)
class Squeeze:
    """S(r) = exp(r/2 (a^2 - a^dag^2)): q scaled by exp(-r), p by exp(r)."""

    mode: int
    r: float

    @property
    def modes(self):
        return (self.mode,)


@dataclass(frozen=True)
class BeamSplitter:
    """U = exp(theta (a^dag b - a b^dag)) between ``mode_a`` and ``mode_b``."""

    mode_a: int
    mode_b: int
    theta: float

    def __post_init__(self):
        if self.mode_a == self.mode_b:
            raise ValueError("beam splitter needs two distinct modes")

    @property
    def modes(self):
        return (self.mode_a, self.mode_b)


@dataclass(frozen=True)
class Loss:
    mode: int
    eta: float

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError("transmissivity eta must lie in [0, 1]")

    @property
    def modes(self):
        return (self.mode,)


@dataclass(frozen=True)
class PhotonSubtraction:
    """Heralded photon subtraction.

    With ``kappa`` set, the idealised low-reflectivity limit is used.
    Otherwise ``theta`` (beam-splitter angle) and ``epsilon`` (detector
    ordering tolerance, ancilla output ordering ``1 - epsilon``) select the
    exact two-mode construction.
    """

    mode: int
    kappa: Optional[float] = None
    theta: Optional[float] = None
    epsilon: Optional[float] = None

    def __post_init__(self):
        if (self.kappa is None) == (self.theta is None):
            raise ValueError("give either kappa (limit form) or theta (exact form)")
        if self.kappa is not None and not self.kappa >= 0:
            raise ValueError("kappa must be non-negative")
        if self.theta is not None:
            if self.epsilon is None or not 0 <= self.epsilon <= 2:
                raise ValueError("exact photon subtraction needs epsilon in [0, 2]")

    @property
    def modes(self):
        return (self.mode,)


@dataclass(frozen=True)
class CubicPhase:
    """exp(i gamma q^3) type gate, bounded with negativity tolerance ``epsilon``."""

    mode: int
    gamma: float
    epsilon: float = 1e-2

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("cubic strength gamma must be positive")

    @property
    def modes(self):
        return (self.mode,)


GateSpec = Union[Displace, PhaseShift, Squeeze, BeamSplitter, Loss, PhotonSubtraction, CubicPhase]
GAUSSIAN_GATES = (Displace, PhaseShift, Squeeze, BeamSplitter, Loss)


@dataclass(frozen=True)
class BSPolicy:
    """How a beam splitter distributes its admissible orderings between its outputs.

    ``kind`` is one of ``balanced``, ``weighted``, ``greedy-a``, ``greedy-b``.
    ``weights`` is only used by ``weighted``.
    """

    kind: str = "balanced"
    weights: tuple = (1.0, 1.0)

    def __post_init__(self):
        if self.kind not in ("balanced", "weighted", "greedy-a", "greedy-b"):
            raise ValueError(f"unknown beam-splitter policy {self.kind!r}")
        if self.kind == "weighted" and not (len(self.weights) == 2 and min(self.weights) > 0):
            raise ValueError("weighted policy needs two positive weights")

    @classmethod
    def parse(cls, text: str) -> "BSPolicy":
        """Parse ``balanced``, ``greedy-a``, ``greedy-b`` or ``weighted:wa,wb``."""
        if text.startswith("weighted"):
            _, _, rest = text.partition(":")
            wa, wb = (float(v) for v in (rest or "1,1").split(","))
            return cls("weighted", (wa, wb))
        return cls(text)

    def __str__(self):
        if self.kind == "weighted":
            # shortest exact repr so that parse(str(p)) == p
            wa, wb = (repr(float(w)).removesuffix(".0") for w in self.weights)
            return f"weighted:{wa},{wb}"
        return self.kind


BALANCED = BSPolicy()


@dataclass(frozen=True)
class RuleOutcome:
    """Result of pushing ordering parameters through one gate.

    Attributes
    ----------
    feasible : bool
        Whether a positive transfer function exists.
    max_output : tuple of float or None
        Largest admissible output orderings, one per touched mode.
    candidate : tuple of float or None
        The unclipped closed-form output; for infeasible outcomes this is the
        value that fell below -1.
    slack : float
        ``min(max_output) + 1`` (or ``min(candidate) + 1`` when infeasible);
        ``-inf`` when the rule has no candidate at all.
    reason : str or None
    """

    feasible: bool
    max_output: Optional[tuple]
    candidate: Optional[tuple] = None
    slack: float = field(default=float("nan"))
    reason: Optional[str] = None

    @classmethod
    def ok(cls, values: Sequence[float], candidate: Sequence[float] | None = None):
        values = tuple(float(v) for v in values)
        cand = tuple(float(v) for v in candidate) if candidate is not None else values
        return cls(True, values, cand, min(values) + 1.0)

    @classmethod
    def fail(cls, reason: str, candidate: Sequence[float] | None = None):
        if candidate is None:
            return cls(False, None, None, -math.inf, reason)
        cand = tuple(float(v) for v in candidate)
        return cls(False, None, cand, min(cand) + 1.0, reason)


def identity_rule(s_in: float) -> RuleOutcome:
    """Displacements and phase shifts leave the ordering unchanged."""
    return RuleOutcome.ok([s_in])


def loss_rule(s_in: float, eta: float, s_max: float = S_MAX_DEFAULT) -> RuleOutcome:
    """Loss with transmissivity eta: s_out <= 1 - eta (1 - s_in)."""
    if not 0 <= eta <= 1:
        raise ValueError("eta must lie in [0, 1]")
    cand = 1 - eta * (1 - s_in)
    return RuleOutcome.ok([min(cand, s_max)], [cand])


def squeeze_rule(s_in: float, r: float) -> RuleOutcome:
    """Squeezing by |r| shrinks positive orderings and stretches negative ones."""
    a = abs(r)
    if s_in >= 0:
        return RuleOutcome.ok([s_in * math.exp(-2 * a)])
    cand = s_in * math.exp(2 * a)
    # decided on the r-threshold so the boundary is exact in r
    if a <= -0.5 * math.log(-s_in):
        return RuleOutcome.ok([max(cand, S_MIN)], [cand])
    return RuleOutcome.fail(
        f"squeezing |r|={a:g} pushes s={s_in:g} below -1", [cand]
    )


def bs_mixing(s_a: float, s_b: float, theta: float) -> np.ndarray:
    """L diag(s_a, s_b) L^T for the beam-splitter mode map L = [[c, s], [-s, c]]."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([
        [c * c * s_a + s * s * s_b, c * s * (s_b - s_a)],
        [c * s * (s_b - s_a), s * s * s_a + c * c * s_b],
    ])


def bs_admissible(s_in: Sequence[float], s_out: Sequence[float], theta: float, tol: float = 1e-12) -> bool:
    """PSD test of the beam-splitter transfer kernel."""
    k = bs_mixing(s_in[0], s_in[1], theta) - np.diag(s_out)
    return bool(np.linalg.eigvalsh(k)[0] >= -tol)


def beamsplitter_rule(s_a: float, s_b: float, theta: float, policy: BSPolicy = BALANCED) -> RuleOutcome:
    """Choose output orderings (t_a, t_b) with diag(t) <= L diag(s) L^T.

    The admissible set is nonempty (with both t >= -1) iff the smallest
    eigenvalue of the mixed matrix is at least -1.  The policy picks a point on
    its Pareto front.
    """
    m = bs_mixing(s_a, s_b, theta)
    m11, m22, m12 = m[0, 0], m[1, 1], m[0, 1]
    lam = float(np.linalg.eigvalsh(m)[0])
    if lam < S_MIN - _TOL:
        return RuleOutcome.fail(
            f"mixed ordering eigenvalue {lam:g} is below -1", [lam, lam]
        )
    if abs(m12) <= _TOL:
        return RuleOutcome.ok([m11, m22])

    def front(ua: float):
        # t_a = m11 - u, t_b = m22 - m12^2 / u
        return m11 - ua, m22 - m12 * m12 / ua

    u_lo = m12 * m12 / (m22 + 1)  # keeps t_b >= -1
    u_hi = m11 + 1  # keeps t_a >= -1
    if policy.kind == "balanced":
        return RuleOutcome.ok([max(lam, S_MIN)] * 2, [lam, lam])
    # m12 != 0 and M + I >= 0 force m11 + 1 > 0 and m22 + 1 > 0
    if policy.kind == "greedy-a":
        return RuleOutcome.ok([m11 - u_lo, S_MIN])
    if policy.kind == "greedy-b":
        return RuleOutcome.ok([S_MIN, m22 - m12 * m12 / u_hi])
    wa, wb = policy.weights
    u = abs(m12) * math.sqrt(wb / wa)
    u = min(max(u, u_lo), u_hi)
    return RuleOutcome.ok(front(u))


def subtraction_limit_rule(s_in: float, kappa: float) -> RuleOutcome:
    """Low-reflectivity photon subtraction with rate parameter kappa."""
    d = 1 - (1 - s_in) * kappa**2
    if d <= 0:
        return RuleOutcome.fail(f"no admissible output for s={s_in:g}, kappa={kappa:g}")
    cand = (s_in - (1 - s_in) * kappa**2) / d
    if cand < S_MIN - _TOL:
        return RuleOutcome.fail(f"subtraction pushes s={s_in:g} below -1", [cand])
    return RuleOutcome.ok([max(cand, S_MIN)], [cand])


def subtraction_limit_endpoint(kappa: float) -> float:
    """Input ordering at which the limit-form curve reaches s_out = -1."""
    return (2 * kappa**2 - 1) / (2 * kappa**2 + 1)


def subtraction_exact_rule(s_in: float, theta: float, epsilon: float) -> RuleOutcome:
    """Exact subtraction: beam splitter with a vacuum ancilla heralded at 1 - epsilon.

    The kernel is L diag(s_in, 1) L^T - diag(t, 1 - epsilon), positive iff
    the ancilla entry a22 is non-negative and t <= m11 - m12^2 / a22.
    """
    c, s = math.cos(theta), math.sin(theta)
    m11 = c * c * s_in + s * s
    m12 = c * s * (1 - s_in)
    a22 = epsilon - s * s * (1 - s_in)  # m22 - (1 - epsilon), written without cancellation
    if a22 < -_TOL:
        return RuleOutcome.fail(
            f"ancilla block negative ({a22:g}); no admissible output"
        )
    if a22 <= _TOL:
        if abs(m12) > 1e-9:
            return RuleOutcome.fail("ancilla block singular with nonzero coupling")
        cand = m11
    else:
        cand = m11 - m12 * m12 / a22
    if cand < S_MIN - _TOL:
        return RuleOutcome.fail(f"subtraction pushes s={s_in:g} below -1", [cand])
    return RuleOutcome.ok([max(cand, S_MIN)], [cand])


def subtraction_lambda_min(s_in: float, s_out: float, theta: float) -> float:
    """Closed-form smallest eigenvalue of the exact kernel at epsilon = 0."""
    a, b = 1 - s_in, 1 - s_out
    return 0.5 * (s_in - s_out - math.sqrt(a * a + b * b - 2 * a * b * math.cos(2 * theta)))


def cubic_rule(s_in: float, gamma: float, epsilon: float = 1e-2) -> RuleOutcome:
    """Cubic phase gate: s_out <= s_in - (2 gamma)^(1/3) r_star(epsilon).

    The raw bound is kept in ``candidate``.  Since the gate never produces a
    state with a positive ordering from a non-Gaussian transfer function, the
    reported maximum is additionally capped at 0.
    """
    from .cubic import r_star

    if s_in <= 0:
        return RuleOutcome.fail(f"cubic gate needs a positive input ordering, got {s_in:g}")
    bound = s_in - (2 * gamma) ** (1 / 3) * r_star(epsilon).r_star
    if bound < S_MIN:
        return RuleOutcome.fail(f"cubic bound {bound:g} is below -1", [bound])
    return RuleOutcome.ok([min(bound, 0.0)], [bound])


def apply_rule(
    gate: GateSpec,
    s_in: Sequence[float],
    policy: BSPolicy = BALANCED,
    s_max: float = S_MAX_DEFAULT,
) -> RuleOutcome:
    """Dispatch to the rule for ``gate``; ``s_in`` lists orderings of ``gate.modes``."""
    if isinstance(gate, (Displace, PhaseShift)):
        return identity_rule(s_in[0])
    if isinstance(gate, Loss):
        return loss_rule(s_in[0], gate.eta, s_max)
    if isinstance(gate, Squeeze):
        return squeeze_rule(s_in[0], gate.r)
    if isinstance(gate, BeamSplitter):
        return beamsplitter_rule(s_in[0], s_in[1], gate.theta, policy)
    if isinstance(gate, PhotonSubtraction):
        if gate.kappa is not None:
            return subtraction_limit_rule(s_in[0], gate.kappa)
        return subtraction_exact_rule(s_in[0], gate.theta, gate.epsilon)
    if isinstance(gate, CubicPhase):
        return cubic_rule(s_in[0], gate.gamma, gate.epsilon)
    raise TypeError(f"unsupported gate {gate!r}")


def squeeze_curve(s_grid: Sequence[float], r: float) -> list[tuple[float, float, bool]]:
    """(s_in, max s_out, feasible) along the squeezing boundary."""
    rows = []
    for s in s_grid:
        o = squeeze_rule(float(s), r)
        rows.append((float(s), o.candidate[0], o.feasible))
    return rows


def subtraction_curve(s_grid: Sequence[float], kappa: float) -> list[tuple[float, float, bool]]:
    """(s_in, max s_out, feasible) for limit-form photon subtraction."""
    rows = []
    for s in s_grid:
        o = subtraction_limit_rule(float(s), kappa)
        rows.append((float(s), o.candidate[0] if o.candidate else math.nan, o.feasible))
    return rows
