"""Time-to-first-reward study on the sparse point-mass task."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..envs import PointMassEnv, SparsePointMassSpec
from ..policy import PolyRLParams
from ..sampler import ActionSpace
from .config import ExperimentConfig
from .runner import _Behaviour, pointmass_episode, seed_streams


@dataclass
class FirstRewardStudy:
    method: str
    lams: tuple[float, ...]
    seeds: tuple[int, ...]
    times: dict  # (lam, seed) -> list of first-reward steps (None = not reached)

    def median(self, lam: float, seed: int) -> float:
        """Median first-reward step; unreached trials count as +inf."""
        t = [math.inf if x is None else x for x in self.times[(lam, seed)]]
        return float(np.median(t))

    def median_over_seeds(self, lam: float) -> float:
        return float(np.median([self.median(lam, s) for s in self.seeds]))

    def growth_exponent(self) -> float:
        """Least-squares slope of log(median time) against log(lambda)."""
        x = np.log(np.asarray(self.lams, dtype=np.float64))
        y = np.log([self.median_over_seeds(lam) for lam in self.lams])
        return float(np.polyfit(x, y, 1)[0])

    def reached_any(self, lam: float, seed: int) -> bool:
        return any(x is not None for x in self.times[(lam, seed)])


def first_reward_study(
    method: str,
    lams,
    seeds,
    trials: int,
    horizon: int,
    params: PolyRLParams | None = None,
    master_seed: int = 0,
    dim: int = 2,
) -> FirstRewardStudy:
    """Run ``trials`` episodes of length ``horizon`` per (lambda, seed).

    Episodes are numbered from 0 within each (lambda, seed), so the PolyRL
    exploitation probability follows its usual early-training schedule.
    """
    params = params or PolyRLParams()
    times = {}
    for lam in lams:
        spec = SparsePointMassSpec(lam=float(lam), dim=dim, max_episode_steps=horizon)
        config = ExperimentConfig(
            environment="pointmass",
            overrides={"lam": float(lam), "dim": dim, "max_episode_steps": horizon},
            method=method,
            polyrl=params,
            episodes=trials,
            seeds=tuple(seeds),
            master_seed=master_seed,
        )
        for seed in seeds:
            rng = seed_streams(master_seed, seed)[0]
            env = PointMassEnv(spec, rng)
            beh = _Behaviour(config, ActionSpace.symmetric(dim, spec.action_high), None, rng)
            times[(lam, seed)] = [pointmass_episode(config, spec, beh, env, ep)[1] for ep in range(trials)]
    return FirstRewardStudy(config.method, tuple(lams), tuple(seeds), times)
