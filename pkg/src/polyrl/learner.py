"""Q-learning with linear function approximation over tile-coded features.

Each discrete action owns one block of weights; a state activates exactly
one tile per tiling inside that block, so ``q(s, a)`` is the sum of
``n_tilings`` weights.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DivergenceError

log = logging.getLogger(__name__)


class FeatureMap:
    """Tile coding with asymmetrically offset tilings.

    Tiling ``t`` is shifted by ``(t * (2j + 1) / n_tilings) mod 1`` tile
    widths along dimension ``j``; each tiling carries one extra tile per
    dimension so shifted grids still cover the state box.
    """

    def __init__(self, low, high, n_tilings: int = 8, tiles: int = 16, n_actions: int = 16):
        self.low = np.asarray(low, dtype=np.float64).reshape(-1)
        self.high = np.asarray(high, dtype=np.float64).reshape(-1)
        if self.low.shape != self.high.shape or not np.all(self.low < self.high):
            raise ValueError("state bounds must satisfy low < high")
        if n_tilings < 1 or tiles < 1 or n_actions < 1:
            raise ValueError("tilings, tiles and actions must be positive")
        self.n_tilings = n_tilings
        self.tiles = tiles
        self.n_actions = n_actions
        self.dim = self.low.size
        self.width = (self.high - self.low) / tiles
        j = np.arange(self.dim)
        t = np.arange(n_tilings)[:, None]
        self._offsets = ((t * (2 * j + 1) / n_tilings) % 1.0) * self.width  # (tilings, dim)
        self._side = tiles + 1
        self._strides = self._side ** np.arange(self.dim)
        self.tiling_size = self._side**self.dim
        self.block = n_tilings * self.tiling_size
        self._tiling_base = np.arange(n_tilings) * self.tiling_size
        self._inv_width = 1.0 / self.width
        self._shift = self._offsets / self.width
        self._last_key = None
        self._last_tiles = None
        self.clamped = 0

    @property
    def length(self) -> int:
        return self.block * self.n_actions

    def tiles_for(self, s) -> np.ndarray:
        """Active tile indices inside one action block (one per tiling)."""
        s = np.asarray(s, dtype=np.float64).reshape(-1)
        key = s.tobytes()
        if key == self._last_key:
            return self._last_tiles
        if (s < self.low).any() or (s > self.high).any():
            self.clamped += 1
            log.debug("state %s outside feature bounds; clamping", s)
            s = np.minimum(np.maximum(s, self.low), self.high)
        coords = np.floor((s - self.low) * self._inv_width + self._shift).astype(np.int64)
        np.minimum(coords, self.tiles, out=coords)
        tiles = self._tiling_base + coords @ self._strides
        self._last_key, self._last_tiles = key, tiles
        return tiles

    def active(self, s, a_idx: int) -> np.ndarray:
        if not 0 <= a_idx < self.n_actions:
            raise IndexError(f"action index {a_idx} out of range")
        return a_idx * self.block + self.tiles_for(s)


def direction_set(k: int = 16, step: float = 1.0, dim: int = 2) -> np.ndarray:
    """``k`` evenly spaced unit directions scaled to ``step`` (2D), or +-axes otherwise."""
    if dim == 2:
        phi = 2 * math.pi * np.arange(k) / k
        return step * np.stack([np.cos(phi), np.sin(phi)], axis=1)
    eye = np.eye(dim)
    return step * np.concatenate([eye, -eye])


@dataclass
class LinearQ:
    fm: FeatureMap
    actions: np.ndarray
    alpha: float = 0.01
    gamma: float = 0.99
    weights: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.actions = np.asarray(self.actions, dtype=np.float64)
        if self.actions.shape[0] != self.fm.n_actions:
            raise ValueError("action set size differs from the feature map's action count")
        if self.weights is None:
            self.weights = np.zeros((self.fm.n_actions, self.fm.block))
        else:
            self.weights = np.asarray(self.weights, dtype=np.float64).reshape(self.fm.n_actions, self.fm.block)

    @property
    def n_actions(self) -> int:
        return self.actions.shape[0]

    def q_values(self, s) -> np.ndarray:
        return self.weights[:, self.fm.tiles_for(s)].sum(axis=1)

    def q_value(self, s, a_idx: int) -> float:
        return float(self.weights.reshape(-1)[self.fm.active(s, a_idx)].sum())

    def greedy_index(self, s) -> int:
        # np.argmax returns the first maximum: ties go to the lowest index
        return int(np.argmax(self.q_values(s)))

    def greedy_action(self, s) -> np.ndarray:
        return self.actions[self.greedy_index(s)].copy()

    def epsilon_greedy_index(self, s, epsilon: float, rng: np.random.Generator) -> int:
        if not 0.0 <= epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        if epsilon > 0 and rng.uniform() < epsilon:
            return int(rng.integers(self.n_actions))
        return self.greedy_index(s)

    def epsilon_greedy_action(self, s, epsilon: float, rng: np.random.Generator) -> np.ndarray:
        return self.actions[self.epsilon_greedy_index(s, epsilon, rng)].copy()

    def td_update(self, s, a_idx: int, r: float, s_next, done: bool) -> float:
        """One Q-learning step on the active features; returns the TD error."""
        tiles = self.fm.tiles_for(s)
        q = float(self.weights[a_idx, tiles].sum())
        target = r
        if not done:
            target += self.gamma * float(self.q_values(s_next).max())
        td = target - q
        if not math.isfinite(td):
            raise DivergenceError(f"non-finite TD error {td!r}")
        self.weights[a_idx, tiles] += self.alpha * td
        return float(td)

    def nearest_index(self, action) -> int:
        """Index of the discrete action closest in direction to a continuous one."""
        a = np.asarray(action, dtype=np.float64).reshape(-1)
        return int(np.argmax(self.actions @ a))

    def save(self, path) -> None:
        path = Path(path)
        tmp = path.with_name(path.name + ".tmp")
        with open(tmp, "wb") as fh:
            np.save(fh, self.weights.reshape(-1))
        tmp.replace(path)

    def load(self, path) -> None:
        w = np.load(Path(path))
        if w.size != self.weights.size:
            raise ValueError(f"weight file holds {w.size} values, expected {self.weights.size}")
        self.weights = w.reshape(self.weights.shape).astype(np.float64)
