"""Real roots of univariate polynomials with a deterministic selection rule."""

from __future__ import annotations

import numpy as np

from ..errors import DegenerateLeadingCoefficient

__all__ = ["real_roots", "preferred_root_batch", "solve_last_variable", "solve_linear_batch"]

IMAG_TOL = 1e-8
DEGENERATE_TOL = 1e-12
# magnitudes this close count as a tie; repeated roots are only accurate
# to about sqrt(machine epsilon), so plain rounding is not enough
TIE_TOL = 1e-6


def _polish(coeffs: np.ndarray, x: float, steps: int = 2) -> float:
    """A couple of Newton steps, kept only when they shrink the residual."""
    d = np.polyder(coeffs)
    best, fbest = x, abs(np.polyval(coeffs, x))
    for _ in range(steps):
        dv = np.polyval(d, best)
        if dv == 0 or not np.isfinite(dv):
            break
        cand = best - np.polyval(coeffs, best) / dv
        fc = abs(np.polyval(coeffs, cand))
        if not np.isfinite(cand) or fc >= fbest:
            break
        best, fbest = cand, fc
    return float(best)


def real_roots(coeffs) -> list[float]:
    """Real roots of a polynomial (highest degree first), ordered by preference.

    Preference is largest absolute value first, positive before negative on
    ties.  Raises DegenerateLeadingCoefficient when the leading coefficient is
    negligible next to the others.
    """
    c = np.asarray(coeffs, dtype=float)
    if c.ndim != 1 or len(c) < 2:
        raise ValueError("need a polynomial of degree >= 1")
    if not np.all(np.isfinite(c)):
        raise DegenerateLeadingCoefficient("non-finite coefficient")
    scale = np.max(np.abs(c))
    if scale == 0 or abs(c[0]) < DEGENERATE_TOL * scale:
        raise DegenerateLeadingCoefficient("leading coefficient is negligible")
    c = c / scale
    if len(c) == 2:
        roots = [-c[1] / c[0]]
    else:
        z = np.roots(c)
        roots = [_polish(c, r.real) for r in z if abs(r.imag) <= IMAG_TOL * (1 + abs(r.real))]
    # largest magnitude first, a positive root wins a tie for the top spot
    roots.sort(key=lambda r: (-abs(r), -np.sign(r)))
    if roots:
        top = abs(roots[0]) * (1 - TIE_TOL)
        pos = [r for r in roots if r > 0 and abs(r) >= top]
        if pos and roots[0] < 0:
            roots.remove(pos[0])
            roots.insert(0, pos[0])
    return [float(r) for r in roots]


def solve_last_variable(coeffs) -> float | None:
    """Preferred real root, or ``None`` when every root is complex."""
    roots = real_roots(coeffs)
    return roots[0] if roots else None


def solve_linear_batch(c1: np.ndarray, c0: np.ndarray) -> np.ndarray:
    """Row-wise root of ``c1*x + c0``; NaN where degenerate."""
    scale = np.maximum(np.abs(c1), np.abs(c0))
    ok = np.abs(c1) >= DEGENERATE_TOL * scale
    out = np.full(c1.shape, np.nan)
    np.divide(-c0, c1, out=out, where=ok & (c1 != 0))
    return out


def _horner(a: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Evaluate row polynomials ``a`` (rows, d+1) at ``x`` (rows, m)."""
    v = np.zeros_like(x)
    for j in range(a.shape[1]):
        v = v * x + a[:, j:j + 1]
    return v


def preferred_root_batch(coeffs: np.ndarray) -> np.ndarray:
    """Row-wise first entry of :func:`real_roots`; NaN where none or degenerate.

    Roots come from the eigenvalues of the companion matrices, which is what
    ``numpy.roots`` does one polynomial at a time.
    """
    C = np.asarray(coeffs, dtype=float)
    n, width = C.shape
    deg = width - 1
    out = np.full(n, np.nan)
    finite = np.isfinite(C).all(axis=1)
    scale = np.where(finite, np.abs(np.where(finite[:, None], C, 0)).max(axis=1), 0.0)
    good = finite & (scale > 0) & (np.abs(C[:, 0]) >= DEGENERATE_TOL * np.where(finite, scale, 0))
    if not good.any():
        return out
    a = C[good] / scale[good, None]
    if deg == 1:
        out[good] = -a[:, 1] / a[:, 0]
        return out
    monic = a / a[:, :1]
    comp = np.zeros((len(a), deg, deg))
    comp[:, 0, :] = -monic[:, 1:]
    comp[:, np.arange(1, deg), np.arange(deg - 1)] = 1.0
    z = np.linalg.eigvals(comp)
    real = np.abs(z.imag) <= IMAG_TOL * (1 + np.abs(z.real))
    x = z.real.copy()
    # Newton polish, each step kept only when it shrinks the residual
    da = a[:, :-1] * np.arange(deg, 0, -1)
    fx = np.abs(_horner(a, x))
    live = real.copy()
    for _ in range(2):
        dv = _horner(da, x)
        with np.errstate(all="ignore"):
            cand = x - _horner(a, x) / dv
            fc = np.abs(_horner(a, cand))
        step = live & (dv != 0) & np.isfinite(dv) & np.isfinite(cand) & (fc < fx)
        x = np.where(step, cand, x)
        fx = np.where(step, fc, fx)
        live = step
    mag = np.where(real, np.abs(x), -np.inf)
    pos = real & (x > 0) & (mag >= (mag.max(axis=1) * (1 - TIE_TOL))[:, None])
    pick = np.where(pos.any(axis=1), np.where(pos, mag, -np.inf).argmax(axis=1), mag.argmax(axis=1))
    chosen = x[np.arange(len(a)), pick]
    chosen[~real.any(axis=1)] = np.nan
    out[good] = chosen
    return out
