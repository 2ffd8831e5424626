"""Adaptive Dormand-Prince 5(4) integration, vectorised over independent problems."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..errors import StepSizeUnderflow

__all__ = ["integrate_rk45", "integrate_batch", "Trajectory"]

# Dormand-Prince tableau
_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_B4 = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B - _B4

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0
MIN_STEP = 1e-12


@dataclass
class Trajectory:
    t: np.ndarray
    y: np.ndarray

    def at_end(self):
        return self.y[-1]


def _step(f, t, y, h, k1):
    """One DP step for every row; returns (y5, err_vector, k7)."""
    ks = [k1]
    for s in range(1, 7):
        acc = y.copy()
        for j, a in enumerate(_A[s]):
            if a:
                acc += (h * a)[:, None] * ks[j]
        ks.append(f(t + _C[s] * h, acc))
    y5 = y + h[:, None] * sum(b * k for b, k in zip(_B, ks) if b)
    err = h[:, None] * sum(e * k for e, k in zip(_E, ks) if e)
    return y5, err, ks[6]


def integrate_batch(f: Callable, y0, t_end, t0: float = 0.0, rtol: float = 1e-6,
                    atol: float = 1e-9, max_steps: int = 10_000, bound: float = 1e6,
                    on_accept: Callable | None = None):
    """Integrate ``y' = f(t, Y)`` for a batch of rows, each to its own ``t_end``.

    ``f`` maps (t vector, Y of shape (rows, dim)) to an array of the same shape.
    Returns (y_final, ok) where ``ok`` flags rows that reached ``t_end`` with
    finite states bounded by ``bound``.  ``on_accept(rows, t, y)`` is called
    after every step with the rows whose step was accepted.
    """
    y = np.array(y0, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    rows = y.shape[0]
    t_end = np.broadcast_to(np.asarray(t_end, dtype=float), (rows,)).copy()
    t = np.full(rows, float(t0))
    ok = np.isfinite(y).all(axis=1)
    active = ok & (t < t_end)
    k1 = np.zeros_like(y)
    if active.any():
        k1[active] = f(t[active], y[active])
    bad = ~np.isfinite(k1).all(axis=1)
    ok &= ~bad
    active &= ~bad
    # initial step from the usual scale heuristic
    scale = atol + rtol * np.abs(y)
    d0 = np.sqrt(np.mean((y / scale) ** 2, axis=1))
    d1 = np.sqrt(np.mean((k1 / scale) ** 2, axis=1))
    h = np.where((d0 < 1e-5) | (d1 < 1e-5), 1e-6, 0.01 * d0 / np.maximum(d1, 1e-300))
    h = np.minimum(h, t_end - t)

    for _ in range(max_steps):
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        hh = np.minimum(h[idx], t_end[idx] - t[idx])
        with np.errstate(all="ignore"):
            y5, err, k7 = _step(f, t[idx], y[idx], hh, k1[idx])
            sc = atol + rtol * np.maximum(np.abs(y[idx]), np.abs(y5))
            en = np.sqrt(np.mean((err / sc) ** 2, axis=1))
        finite = np.isfinite(en) & np.isfinite(y5).all(axis=1) & np.isfinite(k7).all(axis=1)
        accept = finite & (en <= 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            fac = np.where(en == 0, MAX_FACTOR, SAFETY * en ** -0.2)
        fac = np.where(finite, np.clip(fac, MIN_FACTOR, MAX_FACTOR), MIN_FACTOR)
        fac = np.where(accept, fac, np.minimum(fac, 1.0))
        a_idx = idx[accept]
        t[a_idx] += hh[accept]
        y[a_idx] = y5[accept]
        k1[a_idx] = k7[accept]
        if on_accept is not None and len(a_idx):
            on_accept(a_idx, t[a_idx].copy(), y[a_idx].copy())
        h[idx] = hh * fac
        blown = np.abs(y[idx]).max(axis=1) > bound
        tiny = h[idx] < MIN_STEP
        dead = idx[blown | tiny]
        ok[dead] = False
        active[dead] = False
        done = idx[t[idx] >= t_end[idx]]
        active[done] = False
    ok &= ~active  # rows still running ran out of steps
    return y, ok


def integrate_rk45(f: Callable, y0, t_span=(0.0, 1.0), rtol: float = 1e-6, atol: float = 1e-9,
                   max_steps: int = 100_000) -> Trajectory:
    """Single-problem integration returning the accepted-step trajectory.

    ``f(t, y)`` takes a scalar time and a 1-D state.
    """
    y = np.atleast_1d(np.asarray(y0, dtype=float))
    t0, t1 = t_span
    ts, ys = [t0], [y.copy()]

    def fb(tv, Y):
        return np.atleast_2d(np.asarray(f(tv[0], Y[0]), dtype=float))

    def record(_rows, t, Y):
        ts.append(float(t[0]))
        ys.append(Y[0])

    _, ok = integrate_batch(fb, y[None, :], t1, t0=t0, rtol=rtol, atol=atol,
                            max_steps=max_steps, bound=np.inf, on_accept=record)
    if not ok[0]:
        raise StepSizeUnderflow("integration failed before reaching the end of the interval")
    return Trajectory(np.array(ts), np.array(ys))
