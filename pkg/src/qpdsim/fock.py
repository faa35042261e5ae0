"""Truncated Fock-space oracle.

Density matrices of up to two modes are pushed through the circuit gates
exactly (up to truncation), and (s)-ordered functions are computed on a
phase-space grid from the characteristic function.  Grids live in the complex
amplitude plane, alpha = (q + i p) / 2, and are normalised so that
``sum(values) * step**2 ~= 1``.  With that normalisation

    Tr[rho_1 rho_2] = pi * integral W_1^(-s) W_2^(s) d^2 alpha.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import expm
from scipy.special import comb, gammaln

from .circuit import CircuitSpec, DetectorSpec, Heterodyne, IdealOnOff, SinglePhotonProjector
from .gates import BeamSplitter, CubicPhase, Displace, GateSpec, Loss, PhaseShift, PhotonSubtraction, Squeeze
from .phasespace import Coherent, Fock, SqueezedVacuum, StateSpec, Thermal

DEFAULT_DIMS = 25
MAX_MODES = 2
LEAK_TOL = 1e-6
GRID_HALF_WIDTH = 8.0
GRID_STEP = 0.05
XI_STEP = 0.15
XI_WINDOWS = (8.0, 12.0, 18.0, 27.0, 40.0)
CHI_TAIL_TOL = 1e-14
CHI_BOUND_TOL = 1e-6
CHI_TRUST_TOL = 1e-9
RHO_ROUNDING = 1e-15


class TruncationError(RuntimeError):
    """Probability leaked beyond the Fock cutoff; retry with larger dims."""


class SingularOrderingError(RuntimeError):
    """The characteristic function does not decay at the requested ordering."""


class OracleLimitError(ValueError):
    """The circuit is outside the oracle's budget (more than two modes)."""


@dataclass
class TruncatedState:
    dims: tuple
    matrix: np.ndarray
    leak: float = 0.0

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        if len(self.dims) > MAX_MODES:
            raise OracleLimitError(f"oracle limited to {MAX_MODES} modes")
        size = int(np.prod(self.dims))
        if self.matrix.shape != (size, size):
            raise ValueError(f"matrix shape {self.matrix.shape} does not match dims {self.dims}")

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))

    def reduced(self, mode: int) -> "TruncatedState":
        """Partial trace onto one mode."""
        if len(self.dims) == 1:
            return self
        d0, d1 = self.dims
        t = self.matrix.reshape(d0, d1, d0, d1)
        rho = np.einsum("ijkj->ik", t) if mode == 0 else np.einsum("ijil->jl", t)
        return TruncatedState((self.dims[mode],), rho, self.leak)


def destroy(n: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n)), 1)


def _ket_state(coeffs: np.ndarray) -> np.ndarray:
    return np.outer(coeffs, coeffs.conj())


def single_mode_matrix(state: StateSpec, dim: int) -> tuple[np.ndarray, float]:
    """Density matrix of a single-mode state in ``dim`` levels and the weight dropped."""
    n = np.arange(dim)
    if isinstance(state, Fock):
        if state.n >= dim:
            raise TruncationError(f"Fock({state.n}) needs more than {dim} levels")
        rho = np.zeros((dim, dim), complex)
        rho[state.n, state.n] = 1
        return rho, 0.0
    if isinstance(state, Coherent):
        a = complex(state.amplitude)
        if a == 0:
            c = (n == 0).astype(complex)
        else:
            c = np.exp(-abs(a) ** 2 / 2 + n * np.log(a + 0j) - 0.5 * gammaln(n + 1))
        return _ket_state(c), 1 - float(np.sum(abs(c) ** 2))
    if isinstance(state, Thermal):
        nb = state.mean_photons
        p = (n == 0).astype(float) if nb == 0 else np.exp(n * math.log(nb) - (n + 1) * math.log1p(nb))
        return np.diag(p).astype(complex), 1 - float(p.sum())
    if isinstance(state, SqueezedVacuum):
        # S(zeta)|0> with S(zeta) = exp((zeta^* a^2 - zeta a^dag^2) / 2)
        r, phi = state.r, state.phase
        c = np.zeros(dim, complex)
        m = np.arange((dim + 1) // 2)
        t = -np.exp(1j * phi) * math.tanh(r)
        logmag = 0.5 * gammaln(2 * m + 1) - m * math.log(2) - gammaln(m + 1)
        c[2 * m] = t**m * np.exp(logmag) / math.sqrt(math.cosh(r))
        return _ket_state(c), 1 - float(np.sum(abs(c) ** 2))
    raise TypeError(f"unsupported state {state!r}")


def prepare_state(inputs: Sequence[StateSpec], dims: int | Sequence[int] = DEFAULT_DIMS,
                  leak_tol: float = LEAK_TOL) -> TruncatedState:
    """Product state of the given single-mode inputs."""
    if len(inputs) > MAX_MODES:
        raise OracleLimitError(f"oracle limited to {MAX_MODES} modes")
    if isinstance(dims, int):
        dims = (dims,) * len(inputs)
    mats, leak = [], 0.0
    for st, d in zip(inputs, dims):
        rho, lost = single_mode_matrix(st, d)
        if lost > leak_tol:
            raise TruncationError(f"input {st!r} leaks {lost:.2e} beyond {d} levels")
        mats.append(rho)
        leak += max(lost, 0.0)
    return TruncatedState(tuple(dims), reduce(np.kron, mats), leak)


def _mode_ops(dims: Sequence[int], pad: int) -> list[np.ndarray]:
    """Annihilation operators of each mode in the padded product space."""
    big = [d + pad for d in dims]
    ops = []
    for k in range(len(dims)):
        factors = [destroy(b) if j == k else np.eye(b) for j, b in enumerate(big)]
        ops.append(reduce(np.kron, factors))
    return ops


def _embed(rho: np.ndarray, dims, pad: int) -> np.ndarray:
    if len(dims) == 1:
        out = np.zeros((dims[0] + pad,) * 2, complex)
        out[: dims[0], : dims[0]] = rho
        return out
    d0, d1 = dims
    b0, b1 = d0 + pad, d1 + pad
    t = np.zeros((b0, b1, b0, b1), complex)
    t[:d0, :d1, :d0, :d1] = rho.reshape(d0, d1, d0, d1)
    return t.reshape(b0 * b1, b0 * b1)


def _project(rho: np.ndarray, dims, pad: int) -> np.ndarray:
    if len(dims) == 1:
        return rho[: dims[0], : dims[0]].copy()
    d0, d1 = dims
    b0, b1 = d0 + pad, d1 + pad
    t = rho.reshape(b0, b1, b0, b1)[:d0, :d1, :d0, :d1]
    return t.reshape(d0 * d1, d0 * d1).copy()


def _loss_kraus(dim: int, eta: float) -> list[np.ndarray]:
    # E_k = sum_n sqrt(C(n, k)) eta^((n-k)/2) (1-eta)^(k/2) |n-k><n|
    ops = []
    for k in range(dim):
        src = np.arange(k, dim)
        amp = np.sqrt(comb(src, k)) * eta ** ((src - k) / 2) * (1 - eta) ** (k / 2)
        if k > 0 and amp.max() < 1e-13:
            break
        e = np.zeros((dim, dim))
        e[src - k, src] = amp
        ops.append(e)
    return ops


def _unitary(gate: GateSpec, dims, pad: int) -> np.ndarray:
    ops = _mode_ops(dims, pad)
    if isinstance(gate, Displace):
        a = ops[gate.mode]
        al = complex(gate.amplitude)
        return expm(al * a.conj().T - np.conj(al) * a)
    if isinstance(gate, PhaseShift):
        a = ops[gate.mode]
        return expm(1j * gate.angle * (a.conj().T @ a))
    if isinstance(gate, Squeeze):
        a = ops[gate.mode]
        ad = a.conj().T
        return expm(gate.r / 2 * (a @ a - ad @ ad))
    if isinstance(gate, BeamSplitter):
        a, b = ops[gate.mode_a], ops[gate.mode_b]
        return expm(gate.theta * (a.conj().T @ b - a @ b.conj().T))
    if isinstance(gate, CubicPhase):
        a = ops[gate.mode]
        q = a + a.conj().T
        return expm(-1j * gate.gamma / 6 * (q @ q @ q))
    raise TypeError(f"no unitary for {gate!r}")


def apply_gate(state: TruncatedState, gate: GateSpec, pad: Optional[int] = None,
               leak_tol: float = LEAK_TOL) -> TruncatedState:
    """Apply ``gate`` to ``state``.

    Unitaries are exponentiated in a space padded by ``pad`` levels per mode;
    whatever ends up above the cutoff is counted as leak and aborts the
    computation beyond ``leak_tol``.
    """
    if isinstance(gate, PhotonSubtraction):
        raise NotImplementedError("the oracle does not model heralded photon subtraction")
    dims = state.dims
    if max(gate.modes) >= len(dims):
        raise ValueError(f"gate {gate!r} addresses a missing mode")
    if isinstance(gate, Loss):
        kraus = _loss_kraus(dims[gate.mode], gate.eta)
        out = np.zeros_like(state.matrix)
        for e in kraus:
            if len(dims) == 2:
                e = np.kron(e, np.eye(dims[1])) if gate.mode == 0 else np.kron(np.eye(dims[0]), e)
            out += e @ state.matrix @ e.conj().T
        return TruncatedState(dims, out, state.leak)
    if pad is None:
        pad = max(10, min(dims) // 2)
    u = _unitary(gate, dims, pad)
    big = _embed(state.matrix, dims, pad)
    out = _project(u @ big @ u.conj().T, dims, pad)
    lost = state.trace - float(np.real(np.trace(out)))
    leak = state.leak + max(lost, 0.0)
    if leak > leak_tol:
        raise TruncationError(f"truncation leak {leak:.2e} after {gate!r} at dims {dims}")
    return TruncatedState(dims, out, leak)


def run_circuit(circuit: CircuitSpec, dims: int = DEFAULT_DIMS, max_dims: Optional[int] = None,
                leak_tol: float = LEAK_TOL) -> TruncatedState:
    """Simulate inputs and gates, growing the cutoff by 5 until the leak monitor passes.

    Depth estimates near the nonclassical depth need ``leak_tol`` around
    1e-12; the default is enough for probabilities and moments.
    """
    if circuit.mode_count > MAX_MODES:
        raise OracleLimitError(f"oracle limited to {MAX_MODES} modes")
    if max_dims is None:
        max_dims = 80 if circuit.mode_count == 1 else 40
    d = dims
    while True:
        try:
            state = prepare_state(circuit.inputs, d, leak_tol)
            for gate in circuit.layers:
                state = apply_gate(state, gate, leak_tol=leak_tol)
            return state
        except TruncationError:
            d += 5
            if d > max_dims:
                raise


# -- moments ---------------------------------------------------------------

def quadrature_moments(state: TruncatedState) -> tuple[np.ndarray, np.ndarray]:
    """Mean and symmetrised covariance of (q_0, p_0, q_1, p_1, ...)."""
    dims = state.dims
    ops = _mode_ops(dims, 2)
    quads = []
    for a in ops:
        ad = a.conj().T
        quads += [a + ad, -1j * (a - ad)]
    rho = _embed(state.matrix, dims, 2) / state.trace
    mean = np.array([np.real(np.trace(rho @ r)) for r in quads])
    n = len(quads)
    cov = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            sym = 0.5 * (quads[i] @ quads[j] + quads[j] @ quads[i])
            cov[i, j] = cov[j, i] = np.real(np.trace(rho @ sym)) - mean[i] * mean[j]
    return mean, cov


def trace_distance(a: TruncatedState, b: TruncatedState) -> float:
    return 0.5 * float(np.abs(np.linalg.eigvalsh(a.matrix - b.matrix)).sum())


# -- phase-space grids -------------------------------------------------------

@dataclass
class QuasiPdfGrid:
    """(s)-ordered function sampled on a square grid in the alpha plane.

    ``values[i, j]`` is the value at ``alpha = axis[i] + 1j * axis[j]``.
    """

    ordering: float
    axis: np.ndarray
    values: np.ndarray
    xi_window: float = math.nan
    tapered: bool = False

    @property
    def step(self) -> float:
        return float(self.axis[1] - self.axis[0])

    @property
    def total(self) -> float:
        return float(self.values.sum() * self.step**2)


def _grid_axis(half_width: float, step: float) -> np.ndarray:
    k = int(round(half_width / step))
    return step * np.arange(-k, k + 1)


class _CharacteristicCache:
    """Radial decomposition of Tr[rho D(xi)] on a square xi grid.

    With xi = r e^{i phi}, <m|D(xi)|n> = e^{i (m-n) phi} <m|D(r)|n>, so the
    function is a finite Fourier series in phi whose coefficients only need
    evaluating at the distinct radii of the grid.  The Gaussian factor
    exp(-r^2/2) is kept apart so that any ordering can be applied later.
    """

    def __init__(self, rho: np.ndarray, window: float = XI_WINDOWS[-1], step: float = XI_STEP,
                 chunk: int = 4000):
        n = rho.shape[0]
        j = int(math.ceil(window / step))
        self.centre = j
        self.step = step
        ii, jj = np.meshgrid(np.arange(-j, j + 1), np.arange(-j, j + 1), indexing="ij")
        rsq_int = ii**2 + jj**2
        uniq, inv = np.unique(rsq_int.ravel(), return_inverse=True)
        self.inv = inv.reshape(rsq_int.shape)
        self.r2 = (step**2) * uniq.astype(float)
        radii = np.sqrt(self.r2)
        phase = np.exp(1j * np.arctan2(jj, ii))
        phase[j, j] = 1.0
        self.phase = phase

        rhot = rho.T
        self.coeffs = np.zeros((2 * n - 1, len(radii)), complex)  # index k + n - 1, k = m - n
        # log of max |d[m, n]|, used to bound how far rounding in rho is amplified
        self.log_dmax = np.zeros(len(radii))
        sqrt_idx = np.sqrt(np.arange(n))
        logfact = 0.5 * gammaln(np.arange(n) + 1)
        for start in range(0, len(radii), chunk):
            r = radii[start:start + chunk]
            # d[m, n, :] = exp(|xi|^2 / 2) <m|D(r)|n>
            d = np.zeros((n, n, len(r)))
            m = np.arange(n)[:, None]
            with np.errstate(divide="ignore"):
                logr = np.log(r)
            seed = np.zeros((n, len(r)))
            pos = r > 0
            seed[:, pos] = np.exp(m * logr[None, pos] - logfact[:, None])
            seed[0] = 1.0
            d[:, 0] = seed
            for col in range(1, n):
                prev = d[:, col - 1]
                shifted = np.zeros_like(prev)
                shifted[1:] = sqrt_idx[1:, None] * d[:-1, col - 1]
                d[:, col] = (shifted - r[None, :] * prev) / sqrt_idx[col]
            self.log_dmax[start:start + chunk] = np.log(np.abs(d).max(axis=(0, 1)))
            for k in range(-(n - 1), n):
                diag_rho = np.diagonal(rhot, offset=-k)
                diag_d = np.diagonal(d, offset=-k, axis1=0, axis2=1)  # (len(r), len)
                self.coeffs[k + n - 1, start:start + chunk] = diag_d @ diag_rho

    def axis(self, window: float) -> np.ndarray:
        k = min(int(math.ceil(window / self.step - 1e-9)), self.centre)
        return self.step * np.arange(-k, k + 1)

    def trusted_window(self, s: float) -> float:
        """Half-width of the largest square window on which chi^(s) is reliable.

        Rounding of order RHO_ROUNDING in rho reaches chi^(s) multiplied by
        max|<m|D|n>| exp(s r^2 / 2); beyond the first radius where that
        exceeds CHI_TRUST_TOL the values are dominated by noise.
        """
        err = RHO_ROUNDING * np.exp(self.log_dmax + (s - 1) * self.r2 / 2)
        bad = np.nonzero(err > CHI_TRUST_TOL)[0]
        if len(bad) == 0:
            return math.inf
        return math.sqrt(self.r2[bad[0]] / 2)

    def chi(self, s: float, window: float) -> np.ndarray:
        n = (self.coeffs.shape[0] + 1) // 2
        k = (len(self.axis(window)) - 1) // 2
        block = slice(self.centre - k, self.centre + k + 1)
        inv = self.inv[block, block]
        phase = self.phase[block, block]
        radial = self.coeffs * np.exp((s - 1) * self.r2 / 2)[None, :]
        out = radial[n - 1][inv].astype(complex)
        up = np.ones_like(phase)
        for q in range(1, n):
            up = up * phase
            out += up * radial[n - 1 + q][inv] + np.conj(up) * radial[n - 1 - q][inv]
        return out


class _OrderingEvaluator:
    def __init__(self, state: TruncatedState, half_width: float = GRID_HALF_WIDTH, step: float = GRID_STEP):
        if len(state.dims) != 1:
            raise ValueError("phase-space grids are single-mode; reduce the state first")
        self.rho = state.matrix
        self.alpha = _grid_axis(half_width, step)
        self._cache: Optional[_CharacteristicCache] = None

    @property
    def cache(self) -> _CharacteristicCache:
        if self._cache is None:
            self._cache = _CharacteristicCache(self.rho)
        return self._cache

    def grid(self, s: float) -> QuasiPdfGrid:
        c = self.cache
        trusted = c.trusted_window(s)
        windows = [w for w in XI_WINDOWS if w < trusted] or [trusted]
        for window in windows:
            chi = c.chi(s, window)
            band = max(np.abs(chi[[0, -1], :]).max(), np.abs(chi[:, [0, -1]]).max())
            if band < CHI_TAIL_TOL:
                return self._transform(s, c.axis(window), chi, window, tapered=False)
        if trusted < XI_WINDOWS[-1] and window < trusted:
            window = trusted
            chi = c.chi(s, window)
        if np.abs(chi).max() > 1 + CHI_BOUND_TOL:
            raise SingularOrderingError(f"characteristic function exceeds 1 at s={s:g}; singular at this ordering")
        # Fejer taper: triangle window in xi, a positive kernel in alpha
        xi = c.axis(window)
        tri = 1 - np.abs(xi) / (xi[-1] + c.step)
        return self._transform(s, xi, chi * np.outer(tri, tri), window, tapered=True)

    def _transform(self, s, xi_axis, chi, window, tapered) -> QuasiPdfGrid:
        h = xi_axis[1] - xi_axis[0]
        a = self.alpha
        # W(a1 + i a2) = pi^-2 int d^2xi exp(2i (a2 x - a1 y)) chi(x + i y)
        ex = np.exp(2j * np.outer(a, xi_axis))
        ey = np.exp(-2j * np.outer(a, xi_axis))
        w = (h * h / math.pi**2) * (ey @ chi.T @ ex.T)
        return QuasiPdfGrid(s, a.copy(), np.real(w), window, tapered)


def quasi_pdf(
    state: TruncatedState,
    ordering: float,
    half_width: float = GRID_HALF_WIDTH,
    step: float = GRID_STEP,
    mode: Optional[int] = None,
) -> QuasiPdfGrid:
    """(s)-ordered function of one mode on the square grid [-half_width, half_width]^2.

    Raises
    ------
    ValueError
        If ``ordering > 0.9``; smooth a lower ordering instead.
    SingularOrderingError
        If the characteristic function fails the necessary bound |chi| <= 1
        without decaying inside the largest xi window.
    """
    if ordering > 0.9:
        raise ValueError("direct evaluation needs ordering <= 0.9")
    if mode is not None:
        state = state.reduced(mode)
    return _OrderingEvaluator(state, half_width, step).grid(ordering)


def husimi_grid(state: TruncatedState, half_width: float = GRID_HALF_WIDTH, step: float = GRID_STEP,
                mode: Optional[int] = None) -> QuasiPdfGrid:
    """Q function <alpha|rho|alpha> / pi evaluated directly from coherent-state overlaps."""
    if mode is not None:
        state = state.reduced(mode)
    rho = state.matrix
    n = np.arange(rho.shape[0])
    axis = _grid_axis(half_width, step)
    alpha = axis[:, None] + 1j * axis[None, :]
    flat = alpha.ravel()
    logabs = np.log(np.where(flat == 0, 1.0, np.abs(flat)))
    logmag = logabs[:, None] * n[None, :]
    logmag[flat == 0, 1:] = -np.inf
    kets = np.exp(-np.abs(flat)[:, None] ** 2 / 2 + logmag - 0.5 * gammaln(n + 1)[None, :]) * np.exp(
        1j * np.angle(flat)[:, None] * n[None, :]
    )
    vals = np.real(np.einsum("pi,ij,pj->p", kets.conj(), rho, kets)) / math.pi
    return QuasiPdfGrid(-1.0, axis, vals.reshape(alpha.shape))


def gaussian_smooth(grid: QuasiPdfGrid, lower: float) -> QuasiPdfGrid:
    """Convolve a grid down to ordering ``lower`` with the Gaussian kernel

    2 / (pi (s - s')) * exp(-2 |alpha - beta|^2 / (s - s')).
    """
    ds = grid.ordering - lower
    if ds <= 0:
        raise ValueError("smoothing only lowers the ordering")
    h = grid.step
    k = int(math.ceil(math.sqrt(ds * 20) / h))
    x = h * np.arange(-k, k + 1)
    g1 = np.exp(-2 * x**2 / ds) * math.sqrt(2 / (math.pi * ds)) * h
    v = np.apply_along_axis(lambda row: np.convolve(row, g1, mode="same"), 0, grid.values)
    v = np.apply_along_axis(lambda row: np.convolve(row, g1, mode="same"), 1, v)
    return QuasiPdfGrid(lower, grid.axis.copy(), v)


def negativity_volume(grid: QuasiPdfGrid) -> float:
    """Integral of |W| minus one, clipped at zero."""
    return max(float(np.abs(grid.values).sum() * grid.step**2) - 1.0, 0.0)


def is_density(grid: QuasiPdfGrid, rel_tol: float = 1e-6) -> bool:
    return bool(grid.values.min() >= -rel_tol * grid.values.max())


def depth_scan(state: TruncatedState, resolution: float = 1e-3, ceiling: float = 0.9) -> float:
    """Largest grid-positive ordering of a single-mode state, by bisection on [-1, ceiling]."""
    ev = _OrderingEvaluator(state)

    def positive(s: float) -> bool:
        try:
            return is_density(ev.grid(s))
        except SingularOrderingError:
            return False

    if positive(ceiling):
        return ceiling
    lo, hi = -1.0, ceiling
    if not positive(lo):
        return lo
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if positive(mid):
            lo = mid
        else:
            hi = mid
    return lo


def circuit_depth(circuit: CircuitSpec, mode: int = 0, start: int = 40, stride: int = 20,
                  max_dims: Optional[int] = None, resolution: float = 1e-3) -> tuple[float, int]:
    """Depth of one output mode, converged in the Fock cutoff.

    Truncating a state with ordering tau leaves residual negativity close to
    tau that only fades as the cutoff grows, so depth_scan is repeated at
    cutoffs ``start, start + stride, ...`` until two successive estimates
    agree within ``2 * resolution``.

    Returns
    -------
    (depth, dims)
        The last estimate and the cutoff it was obtained at.
    """
    if max_dims is None:
        max_dims = 120 if circuit.mode_count == 1 else 40
    previous = None
    d = start
    while d <= max_dims:
        state = run_circuit(circuit, d, max_dims=d, leak_tol=1.0)
        depth = depth_scan(state.reduced(mode) if len(state.dims) > 1 else state, resolution)
        if previous is not None and abs(depth - previous) <= 2 * resolution:
            return depth, d
        previous = depth
        d += stride
    raise TruncationError(f"depth did not converge up to dims {max_dims}")


# -- detection ---------------------------------------------------------------

def _noisy_single_photon(dim: int, epsilon: float, nodes: int = 40) -> np.ndarray:
    """|1><1| after additive Gaussian noise of quadrature variance epsilon."""
    proj = np.zeros((dim, dim), complex)
    if epsilon == 0:
        proj[1, 1] = 1
        return proj
    x, w = np.polynomial.hermite_e.hermegauss(nodes)
    w = w / w.sum()
    sd = math.sqrt(epsilon) / 2  # each real component of the displacement
    n = np.arange(dim)
    for xr, wr in zip(x, w):
        for xi, wi in zip(x, w):
            beta = sd * (xr + 1j * xi)
            # D(beta)|1> = (a^dag - beta^*) D(beta)|0>
            coh = np.exp(-abs(beta) ** 2 / 2 + n * np.log(beta + 0j) - 0.5 * gammaln(n + 1)) if beta != 0 else (n == 0) * 1.0
            v = np.sqrt(n) * np.roll(coh, 1) - np.conj(beta) * coh
            v[0] = -np.conj(beta) * coh[0]
            proj += wr * wi * np.outer(v, v.conj())
    return proj


def click_operator(detector: DetectorSpec, dim: int) -> np.ndarray:
    """POVM element for outcome ``click = 1`` of a discrete detector."""
    if isinstance(detector, IdealOnOff):
        e = np.eye(dim, dtype=complex)
        e[0, 0] = 0
        return e
    if isinstance(detector, SinglePhotonProjector):
        return _noisy_single_photon(dim, detector.epsilon)
    raise TypeError(f"{detector!r} is not a discrete detector")


@dataclass
class BornResult:
    """Oracle outcome statistics.

    ``discrete`` maps click tuples of the discrete-detector modes (in mode
    order) to probabilities.  For heterodyne modes, ``husimi`` holds the
    reduced Q grid per mode and ``outcome_mean`` / ``outcome_cov`` the joint
    moments of the quadrature-unit outcomes (covariance sigma + I).
    """

    discrete_modes: tuple
    discrete: dict
    heterodyne_modes: tuple
    husimi: dict = field(default_factory=dict)
    outcome_mean: Optional[np.ndarray] = None
    outcome_cov: Optional[np.ndarray] = None
    state: Optional[TruncatedState] = None

    def marginal_cdf(self, mode: int, quadrature: int):
        """CDF of one heterodyne outcome quadrature (0 for q, 1 for p) from the Q grid."""
        grid = self.husimi[mode]
        dens = grid.values.sum(axis=1 - quadrature) * grid.step
        # outcome y = 2 * Re(alpha) or 2 * Im(alpha)
        y = 2 * grid.axis
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * grid.step)])
        cdf /= cdf[-1]
        return lambda v: np.interp(v, y, cdf, left=0.0, right=1.0)


def born_probabilities(circuit: CircuitSpec, dims: int = DEFAULT_DIMS, grid_half_width: float = GRID_HALF_WIDTH,
                       grid_step: float = GRID_STEP) -> BornResult:
    state = run_circuit(circuit, dims)
    rho = state.matrix / state.trace
    state = TruncatedState(state.dims, rho, state.leak)
    disc = tuple(i for i, d in enumerate(circuit.detectors) if not isinstance(d, Heterodyne))
    het = tuple(i for i, d in enumerate(circuit.detectors) if isinstance(d, Heterodyne))

    probs = {}
    if disc:
        d = state.dims
        elems = {}
        for i in disc:
            c = click_operator(circuit.detectors[i], d[i])
            elems[i] = (np.eye(d[i]) - c, c)
        for outcome in np.ndindex(*(2,) * len(disc)):
            factors = []
            for k in range(len(d)):
                factors.append(elems[k][outcome[disc.index(k)]] if k in disc else np.eye(d[k]))
            probs[tuple(int(o) for o in outcome)] = float(np.real(np.trace(rho @ reduce(np.kron, factors))))

    result = BornResult(disc, probs, het, state=state)
    if het:
        mean, cov = quadrature_moments(state)
        idx = [q for m in het for q in (2 * m, 2 * m + 1)]
        result.outcome_mean = mean[idx]
        result.outcome_cov = cov[np.ix_(idx, idx)] + np.eye(len(idx))
        for m in het:
            result.husimi[m] = husimi_grid(state, grid_half_width, grid_step, mode=m)
    return result
