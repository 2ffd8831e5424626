"""Additive noise in three families scaled to a relative level."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "NoiseSpec",
    "FAMILIES",
    "CONSEQUENCE_LEVELS",
    "SYSTEM_LEVELS",
    "exponential_rate",
    "lognormal_shape",
    "noise_draws",
    "apply_noise",
]

FAMILIES = ("gaussian", "exponential", "lognormal")
CONSEQUENCE_LEVELS = (1e-3, 1e-2, 5e-2, 1e-1)
SYSTEM_LEVELS = (1e-4, 1e-3, 1e-2, 1e-1)


@dataclass(frozen=True)
class NoiseSpec:
    family: str = "gaussian"
    epsilon: float = 1e-2

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown noise family {self.family!r}")
        if not 0 < self.epsilon <= 1:
            raise ValueError("epsilon must lie in (0, 1]")


def exponential_rate(sigma: float) -> float:
    """lambda = sqrt(1 / sigma^2)."""
    return math.sqrt(1.0 / sigma**2)


def lognormal_shape(sigma: float) -> float:
    """s with (exp(s^2) - 1) exp(s^2) = 2 sigma^2, via u = exp(s^2)."""
    u = (1.0 + math.sqrt(1.0 + 8.0 * sigma**2)) / 2.0
    return math.sqrt(math.log(u))


def noise_draws(family: str, sigma: float, size: int, rng: np.random.Generator) -> np.ndarray:
    if sigma == 0:
        return np.zeros(size)
    if family == "gaussian":
        return rng.normal(0.0, sigma, size)
    sign = np.where(rng.random(size) < 0.5, -1.0, 1.0)
    if family == "exponential":
        return sign * rng.exponential(1.0 / exponential_rate(sigma), size)
    if family == "lognormal":
        return sign * rng.lognormal(0.0, lognormal_shape(sigma), size)
    raise ValueError(f"unknown noise family {family!r}")


def apply_noise(data, spec: NoiseSpec, mode: str, rng: np.random.Generator):
    """Noisy copy of ``data``; ``mode`` is ``all-columns`` or ``last-column``.

    Constant and theta-derived columns are left untouched; in
    ``last-column`` mode only the target column changes.
    """
    if mode == "all-columns":
        cols = [j for j, r in enumerate(data.roles) if r not in ("constant", "theta-derived")]
    elif mode == "last-column":
        cols = [data.columns.index(data.target)]
    else:
        raise ValueError(f"unknown noise mode {mode!r}")
    values = data.values.copy()
    for j in cols:
        sigma = spec.epsilon * abs(float(np.mean(values[:, j])))
        values[:, j] += noise_draws(spec.family, sigma, len(values), rng)
    return data.with_values(values)
