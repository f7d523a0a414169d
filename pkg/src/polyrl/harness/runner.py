"""Seeded training runs: episode loop, greedy evaluation and CSV export.

Output files (in the run directory):

``metrics.csv``
    seed, episode, train_return, eval_return, steps, coverage,
    greedy_fraction, segments, status -- one row per evaluation point.
``trajectory_seed<N>.csv``
    episode, step, x, y, reward, done -- step 0 is the reset position.
``decisions_seed<N>.csv``
    step, branch, delta_ug2, lb, ub, mode -- PolyRL decision records.
``weights_seed<N>.npy``
    flat learner weights after the final episode.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..envs import NavEnv, NavSpec, PointMassEnv
from ..errors import DivergenceError
from ..learner import FeatureMap, LinearQ, direction_set
from ..policy import PolyRLPolicy
from ..sampler import ActionSpace
from .config import ExperimentConfig, dump_config
from .csvio import write_csv, write_text_atomic

log = logging.getLogger(__name__)

METRICS_HEADER = [
    "seed", "episode", "train_return", "eval_return", "steps",
    "coverage", "greedy_fraction", "segments", "status",
]
TRAJECTORY_HEADER = ["episode", "step", "x", "y", "reward", "done"]
DECISION_HEADER = ["step", "branch", "delta_ug2", "lb", "ub", "mode"]


def seed_streams(master_seed: int, seed: int, n: int = 2) -> list[np.random.Generator]:
    """Independent generators for one seed: training, evaluation, ...

    Derived from ``(master_seed, seed)`` alone, so adding or removing other
    seeds never changes this seed's results.
    """
    ss = np.random.SeedSequence(master_seed, spawn_key=(seed,))
    return [np.random.default_rng(s) for s in ss.spawn(n)]


class CoverageGrid:
    """Incrementally maintained visit map over the chamber."""

    def __init__(self, spec: NavSpec, cell_size: float):
        self.cell = cell_size
        self.nx = int(math.ceil(spec.width / cell_size))
        self.ny = int(math.ceil(spec.height / cell_size))
        self.grid = np.zeros((self.nx, self.ny), dtype=bool)

    def add(self, points) -> None:
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        if pts.shape[0] == 0:
            return
        ix = np.clip(np.floor(pts[:, 0] / self.cell).astype(np.int64), 0, self.nx - 1)
        iy = np.clip(np.floor(pts[:, 1] / self.cell).astype(np.int64), 0, self.ny - 1)
        self.grid[ix, iy] = True

    @property
    def fraction(self) -> float:
        return float(self.grid.sum()) / self.grid.size


@dataclass
class SeedResult:
    seed: int
    metrics: list[tuple] = field(default_factory=list)
    trajectory: list[tuple] = field(default_factory=list)
    decisions: list[tuple] = field(default_factory=list)
    goal_episodes: list[int] = field(default_factory=list)  # training episodes that reached the goal
    learner: LinearQ | None = None
    failed: bool = False
    message: str = ""

    def coverage_at(self, episode: int) -> float:
        for row in self.metrics:
            if row[1] == episode:
                return row[5]
        raise KeyError(episode)


def build_learner(config: ExperimentConfig, spec: NavSpec) -> LinearQ:
    lr = config.learner
    low, high = np.zeros(2), np.array([spec.width, spec.height])
    fm = FeatureMap(low, high, lr.n_tilings, lr.tiles, lr.n_directions)
    return LinearQ(fm, direction_set(lr.n_directions, spec.max_step_length), lr.alpha, lr.gamma)


def greedy_rollouts(q: LinearQ, spec: NavSpec, rng: np.random.Generator, episodes: int) -> list[tuple[float, int, bool]]:
    """Greedy-only rollouts: (return, steps, reached goal) per episode."""
    env = NavEnv(spec, rng)
    out = []
    for _ in range(episodes):
        s = env.reset()
        total, done = 0.0, False
        while not done:
            s, r, done = env.step(q.greedy_action(s))
            total += r
        out.append((total, env.state.steps_elapsed, env.state.terminal))
    return out


class _Behaviour:
    """Chooses training actions for one method; reports greedy/segment counts."""

    def __init__(self, config: ExperimentConfig, space: ActionSpace, q: LinearQ | None, rng):
        self.config = config
        self.space = space
        self.q = q
        self.rng = rng
        self.policy = PolyRLPolicy(config.polyrl, space, rng) if config.method == "polyrl" else None
        self.greedy = 0
        self.decision = None

    def target(self, s):
        if self.q is None:
            # no learner (point mass): the target policy is an untrained uniform one
            return self.space.uniform(self.rng)
        return self.q.greedy_action(s)

    def begin(self, episode: int, s0) -> None:
        self.greedy = 0
        self.epsilon = self.config.learner.epsilon_at(episode)
        if self.policy is not None:
            self.segments_before = self.policy.state.segments if self.policy.state else 0
            self.policy.begin_episode(episode, s0)

    def act(self, s) -> tuple[np.ndarray, int | None]:
        method = self.config.method
        self.decision = None
        if method == "polyrl":
            a, self.decision = self.policy.next_action(s, self.target)
            self.greedy += self.decision.greedy
            return a, (self.q.nearest_index(a) if self.q is not None else None)
        if method == "epsilon_greedy":
            idx = self.q.epsilon_greedy_index(s, self.epsilon, self.rng)
            self.greedy += idx == self.q.greedy_index(s)
            return self.q.actions[idx].copy(), idx
        a = self.space.uniform(self.rng)
        return a, (self.q.nearest_index(a) if self.q is not None else None)

    def observe(self, s_next) -> None:
        if self.policy is not None:
            self.policy.observe_transition(s_next)

    def segments(self) -> int:
        if self.policy is None:
            return 0
        return self.policy.state.segments - self.segments_before


def run_seed(config: ExperimentConfig, seed: int) -> SeedResult:
    spec = config.build_spec()
    if config.environment == "pointmass":
        return _run_pointmass_seed(config, spec, seed)
    train_rng, eval_rng = seed_streams(config.master_seed, seed)
    env = NavEnv(spec, train_rng)
    q = build_learner(config, spec)
    space = ActionSpace.symmetric(2, spec.max_step_length)
    beh = _Behaviour(config, space, q, train_rng)
    grid = CoverageGrid(spec, config.coverage_cell)
    res = SeedResult(seed, learner=q)
    step_id = 0
    for ep in range(config.episodes):
        s = env.reset()
        beh.begin(ep, s)
        positions = [s]
        if config.record_trajectories:
            res.trajectory.append((ep, 0, float(s[0]), float(s[1]), 0.0, False))
        total, done = 0.0, False
        try:
            while not done:
                a, idx = beh.act(s)
                s2, r, done = env.step(a)
                q.td_update(s, idx, r, s2, env.state.terminal)
                beh.observe(s2)
                total += r
                positions.append(s2)
                step_id += 1
                if config.record_trajectories:
                    res.trajectory.append((ep, env.state.steps_elapsed, float(s2[0]), float(s2[1]), r, done))
                d = beh.decision
                if config.record_decisions and d is not None:
                    res.decisions.append((step_id, d.branch.value, d.delta_ug2, d.lb, d.ub, d.mode.value))
                s = s2
        except DivergenceError as exc:
            log.error("seed %d diverged in episode %d: %s", seed, ep, exc)
            res.failed, res.message = True, str(exc)
            res.metrics.append((seed, ep, total, math.nan, env.state.steps_elapsed, grid.fraction, math.nan, 0, "failed"))
            return res
        grid.add(positions)
        if env.state.terminal:
            res.goal_episodes.append(ep)
        if (ep + 1) % config.eval_interval == 0 or ep == config.episodes - 1:
            evals = greedy_rollouts(q, spec, eval_rng, config.eval_episodes)
            eval_return = float(np.mean([e[0] for e in evals])) if evals else math.nan
            steps = env.state.steps_elapsed
            res.metrics.append(
                (seed, ep, total, eval_return, steps, grid.fraction, beh.greedy / steps, beh.segments(), "ok")
            )
    return res


def pointmass_episode(config: ExperimentConfig, spec, beh: _Behaviour, env: PointMassEnv, episode: int):
    """One point-mass episode: (return, first-reward step or None, steps)."""
    s = env.reset()
    beh.begin(episode, s)
    total, first, done = 0.0, None, False
    while not done:
        a, _ = beh.act(s)
        s2, r, done = env.step(a)
        beh.observe(s2)
        total += r
        if r > 0 and first is None:
            first = env.state.steps_elapsed
        s = s2
    return total, first, env.state.steps_elapsed


def _run_pointmass_seed(config: ExperimentConfig, spec, seed: int) -> SeedResult:
    train_rng, _ = seed_streams(config.master_seed, seed)
    env = PointMassEnv(spec, train_rng)
    space = ActionSpace.symmetric(spec.dim, spec.action_high)
    beh = _Behaviour(config, space, None, train_rng)
    res = SeedResult(seed)
    for ep in range(config.episodes):
        total, first, steps = pointmass_episode(config, spec, beh, env, ep)
        if first is not None:
            res.goal_episodes.append(ep)
        if (ep + 1) % config.eval_interval == 0 or ep == config.episodes - 1:
            reached = first if first is not None else steps
            res.metrics.append((seed, ep, total, math.nan, reached, math.nan, beh.greedy / steps, beh.segments(), "ok"))
    return res


def write_seed_outputs(res: SeedResult, config: ExperimentConfig, out: Path) -> None:
    if config.record_trajectories and res.trajectory:
        write_csv(out / f"trajectory_seed{res.seed}.csv", TRAJECTORY_HEADER, res.trajectory)
    if config.record_decisions and config.method == "polyrl":
        write_csv(out / f"decisions_seed{res.seed}.csv", DECISION_HEADER, res.decisions)
    if config.record_weights and res.learner is not None:
        res.learner.save(out / f"weights_seed{res.seed}.npy")


def run_experiment(config: ExperimentConfig, out_dir=None) -> list[SeedResult]:
    """Run every seed; write metrics and per-seed files when ``out_dir`` is given.

    A diverged seed is marked ``failed`` in the metrics and the remaining
    seeds still run.
    """
    out = Path(out_dir) if out_dir is not None else None
    results = []
    for seed in config.seeds:
        log.info("%s/%s seed %d: %d episodes", config.environment, config.method, seed, config.episodes)
        res = run_seed(config, seed)
        results.append(res)
        if out is not None:
            write_seed_outputs(res, config, out)
    if out is not None:
        rows = [row for r in results for row in r.metrics]
        write_csv(out / "metrics.csv", METRICS_HEADER, rows)
        write_text_atomic(out / "config.yaml", dump_config(config))
    return results
