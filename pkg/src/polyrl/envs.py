"""Continuous 2D sparse-reward navigation tasks.

Walls are zero-thickness line segments; the outer box contributes four more.
A move is the action clipped to ``max_step_length``; it stops just short of
the first wall it would cross (no sliding). Reaching the goal disc ends the
episode, standing in the puddle costs ``puddle_reward`` per step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DimensionError

CONTACT_GAP = 1e-6

Segment = tuple[float, float, float, float]


@dataclass(frozen=True)
class NavSpec:
    width: float
    height: float
    start: tuple[float, float]
    goal: tuple[float, float]
    walls: tuple[Segment, ...] = ()
    start_radius: float = 0.5
    goal_radius: float = 0.5
    goal_reward: float = 100.0
    puddle: tuple[float, float, float, float] | None = None  # xmin, ymin, xmax, ymax
    puddle_reward: float = -100.0
    max_step_length: float = 1.0
    max_episode_steps: int = 2000
    name: str = "custom"

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("box dimensions must be positive")
        if self.goal_radius <= 0:
            raise ValueError("goal radius must be positive")
        if self.max_step_length <= 0 or self.max_episode_steps < 1:
            raise ValueError("max_step_length and max_episode_steps must be positive")
        for name, (x, y) in (("start", self.start), ("goal", self.goal)):
            if not (0 < x < self.width and 0 < y < self.height):
                raise ValueError(f"{name} lies outside the box")
            for w in self.walls:
                if _point_segment_distance(x, y, w) < 1e-9:
                    raise ValueError(f"{name} lies on a wall")
        object.__setattr__(self, "walls", tuple(tuple(map(float, w)) for w in self.walls))

    @property
    def boundary(self) -> tuple[Segment, ...]:
        w, h = self.width, self.height
        return ((0.0, 0.0, w, 0.0), (w, 0.0, w, h), (w, h, 0.0, h), (0.0, h, 0.0, 0.0))

    @property
    def all_walls(self) -> tuple[Segment, ...]:
        return self.boundary + self.walls

    def with_overrides(self, **kw) -> NavSpec:
        return replace(self, **kw)


@dataclass(frozen=True)
class NavState:
    position: np.ndarray
    steps_elapsed: int = 0
    done: bool = False
    terminal: bool = False  # goal reached (as opposed to running out of steps)


# --------------------------------------------------------------------------
# Standard layouts
# --------------------------------------------------------------------------


def nested_chambers(door_width: float = 4.0, **kw) -> NavSpec:
    """A 50x50 room centred in a 100x100 chamber, door centred in its top wall.

    The agent starts in the middle of the room; the goal sits in the outer
    chamber.
    """
    lo, hi, mid = 25.0, 75.0, 50.0
    half = door_width / 2
    walls = (
        (lo, lo, hi, lo),
        (hi, lo, hi, hi),
        (lo, hi, lo, lo),
        (lo, hi, mid - half, hi),
        (mid + half, hi, hi, hi),
    )
    defaults = dict(
        width=100.0,
        height=100.0,
        start=(50.0, 50.0),
        goal=(85.0, 85.0),
        walls=walls,
        goal_reward=100.0,
        name="nested",
    )
    defaults.update(kw)
    return NavSpec(**defaults)


def open_chamber(puddle: bool = False, **kw) -> NavSpec:
    """A 400x400 chamber; with ``puddle`` a 40x40 puddle sits between start and goal."""
    defaults = dict(
        width=400.0,
        height=400.0,
        start=(100.0, 100.0),
        goal=(300.0, 300.0),
        goal_radius=10.0,
        goal_reward=1000.0,
        puddle=(180.0, 180.0, 220.0, 220.0) if puddle else None,
        name="puddle" if puddle else "chamber",
    )
    defaults.update(kw)
    return NavSpec(**defaults)


LAYOUTS = {
    "nested": lambda **kw: nested_chambers(**kw),
    "chamber": lambda **kw: open_chamber(puddle=False, **kw),
    "puddle": lambda **kw: open_chamber(puddle=True, **kw),
}


# --------------------------------------------------------------------------
# Dynamics
# --------------------------------------------------------------------------


def _cross(ax: float, ay: float, bx: float, by: float) -> float:
    return ax * by - ay * bx


def _point_segment_distance(px: float, py: float, seg: Segment) -> float:
    ax, ay, bx, by = seg
    ex, ey = bx - ax, by - ay
    ll = ex * ex + ey * ey
    t = 0.0 if ll == 0 else min(1.0, max(0.0, ((px - ax) * ex + (py - ay) * ey) / ll))
    dx, dy = px - (ax + t * ex), py - (ay + t * ey)
    return math.hypot(dx, dy)


def _first_crossing(px, py, qx, qy, walls) -> tuple[float, Segment | None]:
    """Smallest fraction of the move p->q at which a wall is crossed."""
    best, hit = 2.0, None
    for seg in walls:
        ax, ay, bx, by = seg
        ex, ey = bx - ax, by - ay
        sp = _cross(ex, ey, px - ax, py - ay)
        if sp == 0.0:
            continue  # on the wall's line: cannot be inside the wall extent (see _move)
        sq = _cross(ex, ey, qx - ax, qy - ay)
        if sq != 0.0 and (sq > 0) == (sp > 0):
            continue
        t = sp / (sp - sq)
        ix, iy = px + t * (qx - px), py + t * (qy - py)
        ll = ex * ex + ey * ey
        u = ((ix - ax) * ex + (iy - ay) * ey) / ll
        if -1e-12 <= u <= 1.0 + 1e-12 and t < best:
            best, hit = t, seg
    return best, hit


def _side(px: float, py: float, seg: Segment) -> float:
    ax, ay, bx, by = seg
    return _cross(bx - ax, by - ay, px - ax, py - ay)


def move(spec: NavSpec, position, displacement) -> np.ndarray:
    """End point of a move from ``position`` by ``displacement`` with stop-at-contact."""
    px, py = float(position[0]), float(position[1])
    dx, dy = float(displacement[0]), float(displacement[1])
    qx, qy = px + dx, py + dy
    t, seg = _first_crossing(px, py, qx, qy, spec.all_walls)
    if seg is None:
        return np.array([qx, qy])
    length = math.hypot(dx, dy)
    travel = max(0.0, t * length - CONTACT_GAP)
    nx, ny = px + dx / length * travel, py + dy / length * travel
    side0, side1 = _side(px, py, seg), _side(nx, ny, seg)
    if side1 == 0.0 or (side1 > 0) != (side0 > 0):
        return np.array([px, py])
    return np.array([nx, ny])


def clip_step(spec: NavSpec, action) -> np.ndarray:
    a = np.asarray(action, dtype=np.float64).reshape(-1)
    if a.shape[0] != 2:
        raise DimensionError("navigation actions are 2D")
    norm = math.hypot(a[0], a[1])
    if norm > spec.max_step_length:
        a = a * (spec.max_step_length / norm)
    return a


def segment_hits_disc(p, q, center, radius: float) -> bool:
    return _point_segment_distance(center[0], center[1], (p[0], p[1], q[0], q[1])) <= radius


def in_puddle(spec: NavSpec, position) -> bool:
    if spec.puddle is None:
        return False
    x0, y0, x1, y1 = spec.puddle
    return x0 <= position[0] <= x1 and y0 <= position[1] <= y1


def reset(spec: NavSpec, rng: np.random.Generator) -> NavState:
    """Start uniformly inside the start disc."""
    sx, sy = spec.start
    if spec.start_radius > 0:
        r = spec.start_radius * math.sqrt(rng.uniform())
        phi = rng.uniform(0.0, 2 * math.pi)
        pos = np.array([sx + r * math.cos(phi), sy + r * math.sin(phi)])
    else:
        pos = np.array([sx, sy], dtype=np.float64)
    return NavState(pos)


def step(spec: NavSpec, state: NavState, action) -> tuple[NavState, float, bool]:
    if state.done:
        raise RuntimeError("step called on a finished episode")
    disp = clip_step(spec, action)
    new = move(spec, state.position, disp)
    reward = 0.0
    reached = segment_hits_disc(state.position, new, spec.goal, spec.goal_radius)
    if reached:
        reward += spec.goal_reward
    if in_puddle(spec, new):
        reward += spec.puddle_reward
    steps = state.steps_elapsed + 1
    done = reached or steps >= spec.max_episode_steps
    return NavState(new, steps, done, reached), reward, done


class NavEnv:
    """Stateful convenience wrapper around :func:`reset` and :func:`step`."""

    def __init__(self, spec: NavSpec, rng: np.random.Generator):
        self.spec = spec
        self.rng = rng
        self.state: NavState | None = None

    def reset(self) -> np.ndarray:
        self.state = reset(self.spec, self.rng)
        return self.state.position

    def step(self, action) -> tuple[np.ndarray, float, bool]:
        self.state, reward, done = step(self.spec, self.state, action)
        return self.state.position, reward, done

    @property
    def state_low(self) -> np.ndarray:
        return np.zeros(2)

    @property
    def state_high(self) -> np.ndarray:
        return np.array([self.spec.width, self.spec.height])


# --------------------------------------------------------------------------
# Sparse point mass
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SparsePointMassSpec:
    """Free point mass rewarded once per episode for reaching distance ``lam``."""

    lam: float
    dim: int = 2
    action_high: float = 1.0
    velocity_cap: float = 1.0
    max_episode_steps: int = 200
    reward: float = 1.0
    name: str = "pointmass"

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("sparsity threshold must be positive")
        if self.dim < 2:
            raise ValueError("point mass needs dim >= 2")


@dataclass(frozen=True)
class PointMassState:
    position: np.ndarray
    steps_elapsed: int = 0
    done: bool = False
    rewarded: bool = False


def reset_pointmass(spec: SparsePointMassSpec) -> PointMassState:
    return PointMassState(np.zeros(spec.dim))


def step_pointmass(spec: SparsePointMassSpec, state: PointMassState, action):
    if state.done:
        raise RuntimeError("step called on a finished episode")
    a = np.asarray(action, dtype=np.float64).reshape(-1)
    if a.shape[0] != spec.dim:
        raise DimensionError("action dimension mismatch")
    norm = math.sqrt(float(a @ a))
    if norm > spec.velocity_cap:
        a = a * (spec.velocity_cap / norm)
    pos = state.position + a
    reward = 0.0
    rewarded = state.rewarded
    if not rewarded and math.sqrt(float(pos @ pos)) >= spec.lam:
        reward, rewarded = spec.reward, True
    steps = state.steps_elapsed + 1
    done = steps >= spec.max_episode_steps
    return PointMassState(pos, steps, done, rewarded), reward, done


class PointMassEnv:
    def __init__(self, spec: SparsePointMassSpec, rng: np.random.Generator | None = None):
        self.spec = spec
        self.rng = rng
        self.state: PointMassState | None = None

    def reset(self) -> np.ndarray:
        self.state = reset_pointmass(self.spec)
        return self.state.position

    def step(self, action):
        self.state, reward, done = step_pointmass(self.spec, self.state, action)
        return self.state.position, reward, done


# --------------------------------------------------------------------------
# Coverage
# --------------------------------------------------------------------------


def coverage(trajectory, spec: NavSpec, cell_size: float) -> float:
    """Fraction of grid cells of the box that hold at least one trajectory point."""
    if cell_size <= 0:
        raise ValueError("cell_size must be positive")
    pts = np.asarray(trajectory, dtype=np.float64).reshape(-1, 2)
    nx = int(math.ceil(spec.width / cell_size))
    ny = int(math.ceil(spec.height / cell_size))
    if pts.shape[0] == 0:
        return 0.0
    ix = np.clip(np.floor(pts[:, 0] / cell_size).astype(np.int64), 0, nx - 1)
    iy = np.clip(np.floor(pts[:, 1] / cell_size).astype(np.int64), 0, ny - 1)
    return np.unique(ix * ny + iy).size / (nx * ny)


def visited_cells(trajectory, spec: NavSpec, cell_size: float) -> np.ndarray:
    """Boolean ``(nx, ny)`` visit map, used for heat overlays."""
    pts = np.asarray(trajectory, dtype=np.float64).reshape(-1, 2)
    nx = int(math.ceil(spec.width / cell_size))
    ny = int(math.ceil(spec.height / cell_size))
    grid = np.zeros((nx, ny), dtype=bool)
    if pts.shape[0]:
        ix = np.clip(np.floor(pts[:, 0] / cell_size).astype(np.int64), 0, nx - 1)
        iy = np.clip(np.floor(pts[:, 1] / cell_size).astype(np.int64), 0, ny - 1)
        grid[ix, iy] = True
    return grid
