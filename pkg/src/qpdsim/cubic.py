"""Airy-function numerics behind the cubic phase gate's ordering bound.

The sign of the cubic gate's transfer function is governed by the
Gaussian-smoothed Airy integral::

    I(r, w) = int exp(-(y - w)^2 / r) Ai(y) dy

and the gate admits a transfer function with negativity bounded by ``eps``
once ``r >= r_star(eps)``.  Everything here is self-contained: the Airy
function is evaluated from its Maclaurin series near the origin and from the
standard asymptotic expansions further out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize_scalar

AIRY_RANGE = (-40.0, 40.0)

# Ai(0) and -Ai'(0)
_C1 = 0.355028053887817239260063186004183176
_C2 = 0.258819403792806798405183560189203963

# Maclaurin series is used on [_NEG_SWITCH, _POS_SWITCH]
_NEG_SWITCH = -7.0
_POS_SWITCH = 6.0
_N_MACLAURIN = 45

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)
_LOG_CUTOFF = 41.5  # exp(-41.5) ~ 1e-18: Gaussian tail dropped beyond this
_Y_MAX = 30.0  # Ai(30) ~ 1e-49


class ConvergenceError(RuntimeError):
    """Raised when a threshold search cannot bracket or resolve its root."""


def _asymptotic_coeffs(n: int) -> np.ndarray:
    u = np.empty(n)
    u[0] = 1.0
    for k in range(1, n):
        u[k] = u[k - 1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216 * k)
    return u


_U = _asymptotic_coeffs(40)


def _maclaurin(x: np.ndarray) -> np.ndarray:
    x3 = x**3
    f = np.ones_like(x)
    g = x.copy()
    tf = np.ones_like(x)
    tg = x.copy()
    for k in range(1, _N_MACLAURIN):
        tf = tf * x3 / ((3 * k - 1) * (3 * k))
        tg = tg * x3 / ((3 * k) * (3 * k + 1))
        f += tf
        g += tg
    return _C1 * f - _C2 * g


def _truncated_series(signed_terms: np.ndarray) -> np.ndarray:
    """Sum an asymptotic series row-wise, stopping before the smallest term."""
    mags = np.abs(signed_terms)
    growing = np.zeros(mags.shape, dtype=bool)
    growing[:, 1:] = mags[:, 1:] > mags[:, :-1]
    stop = np.logical_or.accumulate(growing, axis=1)
    return np.where(stop, 0.0, signed_terms).sum(axis=1)


def _asymptotic_positive(x: np.ndarray) -> np.ndarray:
    zeta = 2.0 / 3.0 * x**1.5
    k = np.arange(len(_U))
    terms = (-1.0) ** k * _U[None, :] / zeta[:, None] ** k
    series = _truncated_series(terms)
    return np.exp(-zeta) / (2 * math.sqrt(math.pi) * x**0.25) * series


def _asymptotic_negative(x: np.ndarray) -> np.ndarray:
    z = -x
    zeta = 2.0 / 3.0 * z**1.5
    k = np.arange(len(_U) // 2)
    even = (-1.0) ** k * _U[None, 2 * k] / zeta[:, None] ** (2 * k)
    odd = (-1.0) ** k * _U[None, 2 * k + 1] / zeta[:, None] ** (2 * k + 1)
    phase = zeta - math.pi / 4
    return (np.cos(phase) * _truncated_series(even) + np.sin(phase) * _truncated_series(odd)) / (
        math.sqrt(math.pi) * z**0.25
    )


def _airy_unchecked(x):
    x = np.asarray(x, dtype=float)
    flat = np.atleast_1d(x).ravel()
    out = np.empty_like(flat)
    mid = (flat >= _NEG_SWITCH) & (flat <= _POS_SWITCH)
    hi = flat > _POS_SWITCH
    lo = flat < _NEG_SWITCH
    if mid.any():
        out[mid] = _maclaurin(flat[mid])
    if hi.any():
        out[hi] = _asymptotic_positive(flat[hi])
    if lo.any():
        out[lo] = _asymptotic_negative(flat[lo])
    return out.reshape(x.shape) if x.ndim else float(out[0])


def airy_ai(x):
    """Airy function Ai(x) for real x in [-40, 40] (scalar or array)."""
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)) or arr.min(initial=0.0) < AIRY_RANGE[0] or arr.max(initial=0.0) > AIRY_RANGE[1]:
        raise ValueError(f"airy_ai supports x in {AIRY_RANGE}")
    return _airy_unchecked(x)


def _panel_edges(lo: float, hi: float, r: float) -> np.ndarray:
    # half an Airy wavelength (2 pi / sqrt|y|) or half the kernel width, whichever is smaller
    kernel_step = 0.5 * math.sqrt(r)
    edges = [lo]
    y = lo
    while y < hi:
        step = min(kernel_step, math.pi / math.sqrt(max(abs(y), 1.0)), 1.0)
        y = min(y + step, hi)
        edges.append(y)
    return np.asarray(edges)


def _nodes(lo: float, hi: float, r: float) -> tuple[np.ndarray, np.ndarray]:
    edges = _panel_edges(lo, hi, r)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    y = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    wt = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    return y, wt


@dataclass(frozen=True)
class SmoothedAiryQuery:
    r: float
    w: float

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("smoothing width r must be positive")


def _smoothed_many(r: float, ws: np.ndarray, chunk: int = 256) -> np.ndarray:
    half_width = math.sqrt(_LOG_CUTOFF * r)
    lo = float(ws.min()) - half_width
    hi = min(float(ws.max()) + half_width, _Y_MAX)
    if hi <= lo:
        return np.zeros_like(ws)
    y, wt = _nodes(lo, hi, r)
    f = wt * _airy_unchecked(y)
    out = np.empty(len(ws))
    for start in range(0, len(ws), chunk):
        block = ws[start:start + chunk]
        out[start:start + chunk] = np.exp(-((y[None, :] - block[:, None]) ** 2) / r) @ f
    return out


def smoothed_airy(query: SmoothedAiryQuery | float, w: float | None = None) -> float:
    """Evaluate I(r, w) by Gauss-Legendre panels sized to the Airy wavelength.

    Accepts either a :class:`SmoothedAiryQuery` or the pair ``(r, w)``.
    """
    if not isinstance(query, SmoothedAiryQuery):
        query = SmoothedAiryQuery(float(query), float(w))
    return float(_smoothed_many(query.r, np.array([query.w]))[0])


def min_window(r: float) -> tuple[float, float]:
    return -20.0 * max(1.0, math.sqrt(r)), 5.0


def min_over_w(r: float, step: float = 0.05, n_candidates: int = 3) -> tuple[float, float]:
    """Global minimum of I(r, .) over the search window.

    Coarse grid scan, then bounded Brent refinement around the lowest local
    minima.  Returns ``(w_min, value)``; ties go to the smaller ``w``.
    """
    if not r > 0:
        raise ValueError("r must be positive")
    lo, hi = min_window(r)
    ws = np.arange(lo, hi + step / 2, step)
    vals = _smoothed_many(r, ws)
    interior = np.flatnonzero((vals[1:-1] <= vals[:-2]) & (vals[1:-1] <= vals[2:])) + 1
    cand = list(interior[np.argsort(vals[interior], kind="stable")][:n_candidates])
    if not cand:
        cand = [int(np.argmin(vals))]

    best_w, best_v = None, math.inf
    for i in sorted(cand):
        a, b = ws[max(i - 1, 0)], ws[min(i + 1, len(ws) - 1)]
        res = minimize_scalar(
            lambda t: smoothed_airy(r, t), bounds=(a, b), method="bounded",
            options={"xatol": 1e-9},
        )
        w_i, v_i = float(res.x), float(res.fun)
        if vals[i] < v_i:
            w_i, v_i = float(ws[i]), float(vals[i])
        if v_i < best_v:
            best_w, best_v = w_i, v_i
    return best_w, best_v


@dataclass(frozen=True)
class RStarResult:
    epsilon: float
    r_star: float
    bracket: tuple[float, float]
    achieved_minimum: float


@lru_cache(maxsize=64)
def r_star(epsilon: float, width: float = 1e-3) -> RStarResult:
    """Smallest r with min_w I(r, w) >= -epsilon, found by bracketing and bisection.

    The returned ``r_star`` is the upper end of the final bracket, so the
    bound holds there.
    """
    if not 1e-5 <= epsilon <= 1e-1:
        raise ValueError("epsilon must lie in [1e-5, 1e-1]")
    if width > 0.05:
        raise ValueError("bracket width must not exceed 0.05")

    def g(r: float) -> float:
        return min_over_w(r)[1] + epsilon

    lo = 1.0
    if g(lo) >= 0:
        lo = 0.1
        if g(lo) >= 0:
            raise ConvergenceError(f"no sign change for epsilon={epsilon} in [0.1, 64]")
    hi = 2 * lo
    while g(hi) < 0:
        lo, hi = hi, 2 * hi
        if hi > 64:
            raise ConvergenceError(f"no sign change for epsilon={epsilon} in [0.1, 64]")
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
    return RStarResult(epsilon, hi, (lo, hi), min_over_w(hi)[1])
