"""Angle-constrained persistent action sampling.

A random point ``P`` of the action box is split into its projection ``Vp``
on the previous action and the orthogonal remainder ``Vr``. The remainder is
rescaled so that the new action ``Q = k Vr + Vp`` makes angle ``eta`` with
the previous action; the sign is flipped when ``P`` points backwards, so the
result always has a positive component along the previous action.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError

ETA_MIN = 1e-4
ETA_MAX = math.pi / 2 - 1e-3
MAX_RESAMPLES = 16


@dataclass(frozen=True)
class ActionSpace:
    low: np.ndarray
    high: np.ndarray

    def __post_init__(self):
        low = np.asarray(self.low, dtype=np.float64).reshape(-1)
        high = np.asarray(self.high, dtype=np.float64).reshape(-1)
        if low.shape != high.shape:
            raise DimensionError("low and high must have the same shape")
        if low.size < 2:
            raise DimensionError("action space needs dim >= 2")
        if not np.all(low < high):
            raise ValueError("low must be < high componentwise")
        object.__setattr__(self, "low", low)
        object.__setattr__(self, "high", high)

    @classmethod
    def symmetric(cls, dim: int, m: float) -> ActionSpace:
        return cls(np.full(dim, -m), np.full(dim, m))

    @property
    def dim(self) -> int:
        return self.low.size

    def uniform(self, rng: np.random.Generator) -> np.ndarray:
        return self.low + (self.high - self.low) * rng.random(self.low.size)

    def clip(self, a: np.ndarray) -> np.ndarray:
        return np.minimum(np.maximum(a, self.low), self.high)

    def contains(self, a: np.ndarray) -> bool:
        return bool(np.all(a >= self.low) and np.all(a <= self.high))


def sample_eta(theta: float, sigma_sq: float, rng: np.random.Generator) -> float:
    """Draw ``eta ~ N(theta, sigma_sq)`` and clamp it to ``[ETA_MIN, ETA_MAX]``."""
    eta = theta if sigma_sq == 0 else rng.normal(theta, math.sqrt(sigma_sq))
    return clamp_eta(eta)


def clamp_eta(eta: float) -> float:
    return min(ETA_MAX, max(ETA_MIN, float(eta)))


@dataclass
class Sample:
    action: np.ndarray
    raw: np.ndarray
    clipped: bool
    fallback: bool


def rotate_from(prev: np.ndarray, point: np.ndarray, eta: float) -> np.ndarray | None:
    """Deterministic core: the unclipped action built from ``point``.

    Returns None when ``point`` is unusable (zero projection or collinear
    with ``prev``).
    """
    prev_sq = float(prev @ prev)
    d = float(prev @ point)
    if d == 0.0:
        return None
    vp = (d / prev_sq) * prev
    vr = point - vp
    # re-project: Vr must be orthogonal to prev to round-off for the angle to hold
    vr -= (float(vr @ prev) / prev_sq) * prev
    vr_norm = math.sqrt(float(vr @ vr))
    vp_norm = math.sqrt(float(vp @ vp))
    if vr_norm < 1e-12 * max(1.0, math.sqrt(float(point @ point))):
        return None
    k = vp_norm * math.tan(eta) / vr_norm
    q = k * vr + vp
    return q if d > 0 else -q


def uniform_direction(space: ActionSpace, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal(space.dim)
    while float(g @ g) < 1e-24:
        g = rng.standard_normal(space.dim)
    half = float(np.mean((space.high - space.low) / 2))
    return g / math.sqrt(float(g @ g)) * half


def sample_action_detail(prev, eta: float, space: ActionSpace, rng: np.random.Generator) -> Sample:
    prev = np.asarray(prev, dtype=np.float64).reshape(-1)
    if prev.shape[0] != space.dim:
        raise DimensionError("previous action has the wrong dimension")
    raw = None
    if math.sqrt(float(prev @ prev)) > 1e-9:
        for _ in range(MAX_RESAMPLES):
            raw = rotate_from(prev, space.uniform(rng), eta)
            if raw is not None:
                break
    fallback = raw is None
    if fallback:
        raw = uniform_direction(space, rng)
    action = space.clip(raw)
    return Sample(action, raw, bool((action != raw).any()), fallback)


def sample_action(prev, eta: float, space: ActionSpace, rng: np.random.Generator) -> np.ndarray:
    """Next persistent action at angle ``eta`` from ``prev``, clipped to the box."""
    return sample_action_detail(prev, eta, space, rng).action
