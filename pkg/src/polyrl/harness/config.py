"""Experiment configuration.

A config is a YAML mapping. Every key is optional; omitted keys take the
defaults below. Example::

    environment:
      name: nested          # nested | chamber | puddle | pointmass
      overrides:            # any NavSpec / SparsePointMassSpec field
        max_episode_steps: 2000
    method: polyrl          # polyrl | epsilon_greedy | uniform
    polyrl:
      beta: 0.01
      theta: 0.2
      sigma_sq: 0.001
      switch_distribution: normal
      break_on_obtuse_angle: false
      min_segment_states: 3
    learner:
      alpha: 0.01
      gamma: 0.99
      n_tilings: 8
      tiles: 16
      n_directions: 16
      epsilon: 0.1
      epsilon_final: null   # set to decay epsilon linearly
      epsilon_decay_episodes: 0
    episodes: 20
    evaluation:
      interval: 1           # evaluate after every N training episodes
      episodes: 1           # greedy rollouts per evaluation point
    seeds: [0]
    master_seed: 0
    coverage_cell: 2.0
    record:
      trajectories: true
      decisions: false
      weights: true
    output_dir: runs/default
"""

from __future__ import annotations

import copy
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import yaml

from ..envs import LAYOUTS, SparsePointMassSpec
from ..errors import ConfigError, DomainError
from ..policy import PolyRLParams

METHODS = ("polyrl", "epsilon_greedy", "uniform")
ENVIRONMENTS = tuple(LAYOUTS) + ("pointmass",)
POINTMASS_DEFAULTS = {"lam": 10.0}


def normalize_method(name: str) -> str:
    m = str(name).strip().lower().replace("-", "_")
    if m == "uniform_random":
        m = "uniform"
    if m not in METHODS:
        raise ConfigError(f"unknown method {name!r}; expected one of {', '.join(METHODS)}")
    return m


@dataclass(frozen=True)
class LearnerSettings:
    alpha: float = 0.01
    gamma: float = 0.99
    n_tilings: int = 8
    tiles: int = 16
    n_directions: int = 16
    epsilon: float = 0.1
    epsilon_final: float | None = None
    epsilon_decay_episodes: int = 0

    def epsilon_at(self, episode: int) -> float:
        if self.epsilon_final is None or self.epsilon_decay_episodes <= 0:
            return self.epsilon
        frac = min(1.0, episode / self.epsilon_decay_episodes)
        return self.epsilon + frac * (self.epsilon_final - self.epsilon)


@dataclass(frozen=True)
class ExperimentConfig:
    environment: str = "nested"
    overrides: dict = field(default_factory=dict)
    method: str = "polyrl"
    polyrl: PolyRLParams = field(default_factory=PolyRLParams)
    learner: LearnerSettings = field(default_factory=LearnerSettings)
    episodes: int = 20
    eval_interval: int = 1
    eval_episodes: int = 1
    seeds: tuple[int, ...] = (0,)
    master_seed: int = 0
    coverage_cell: float = 2.0
    record_trajectories: bool = True
    record_decisions: bool = False
    record_weights: bool = True
    output_dir: str = "runs/default"

    def __post_init__(self):
        object.__setattr__(self, "method", normalize_method(self.method))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        self.validate()

    def validate(self) -> None:
        if self.environment not in ENVIRONMENTS:
            raise ConfigError(f"unknown environment {self.environment!r}")
        if self.episodes < 1:
            raise ConfigError("episodes must be >= 1")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if any(s < 0 for s in self.seeds) or self.master_seed < 0:
            raise ConfigError("seeds must be non-negative")
        if self.eval_interval < 1 or self.eval_episodes < 0:
            raise ConfigError("evaluation interval must be >= 1 and episode count >= 0")
        if self.coverage_cell <= 0:
            raise ConfigError("coverage_cell must be positive")
        lr = self.learner
        if not 0 < lr.alpha or not 0 <= lr.gamma <= 1:
            raise ConfigError("learner needs alpha > 0 and gamma in [0, 1]")
        if not 0 <= lr.epsilon <= 1 or (lr.epsilon_final is not None and not 0 <= lr.epsilon_final <= 1):
            raise ConfigError("epsilon must lie in [0, 1]")
        if lr.n_tilings < 1 or lr.tiles < 1 or lr.n_directions < 2:
            raise ConfigError("tile coding needs positive sizes and at least 2 directions")
        if self.environment == "pointmass" and self.method == "epsilon_greedy":
            raise ConfigError("the point-mass task supports the polyrl and uniform methods only")
        try:
            self.build_spec()
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid environment overrides: {exc}") from exc

    def build_spec(self):
        kw = dict(self.overrides)
        if self.environment == "pointmass":
            return SparsePointMassSpec(**{**POINTMASS_DEFAULTS, **kw})
        return LAYOUTS[self.environment](**kw)

    def with_updates(self, **kw) -> ExperimentConfig:
        return replace(self, **kw)

    def to_dict(self) -> dict:
        return {
            "environment": {"name": self.environment, "overrides": copy.deepcopy(self.overrides)},
            "method": self.method,
            "polyrl": asdict(self.polyrl),
            "learner": asdict(self.learner),
            "episodes": self.episodes,
            "evaluation": {"interval": self.eval_interval, "episodes": self.eval_episodes},
            "seeds": list(self.seeds),
            "master_seed": self.master_seed,
            "coverage_cell": self.coverage_cell,
            "record": {
                "trajectories": self.record_trajectories,
                "decisions": self.record_decisions,
                "weights": self.record_weights,
            },
            "output_dir": self.output_dir,
        }


_TOP_KEYS = {
    "environment", "method", "polyrl", "learner", "episodes", "evaluation",
    "seeds", "master_seed", "coverage_cell", "record", "output_dir",
}


def _section(raw: dict, key: str) -> dict:
    value = raw.get(key) or {}
    if not isinstance(value, dict):
        raise ConfigError(f"{key!r} must be a mapping")
    return value


def config_from_dict(raw: dict | None) -> ExperimentConfig:
    raw = raw or {}
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    env = raw.get("environment", "nested")
    if isinstance(env, str):
        env = {"name": env}
    if not isinstance(env, dict):
        raise ConfigError("'environment' must be a name or a mapping")
    overrides = env.get("overrides") or {}
    if not isinstance(overrides, dict):
        raise ConfigError("environment overrides must be a mapping")
    # yaml lists become tuples so specs stay hashable
    overrides = {
        k: tuple(tuple(x) if isinstance(x, list) else x for x in v) if isinstance(v, list) else v
        for k, v in overrides.items()
    }
    evaluation = _section(raw, "evaluation")
    record = _section(raw, "record")
    seeds = raw.get("seeds", [0])
    if isinstance(seeds, int):
        seeds = [seeds]
    try:
        return ExperimentConfig(
            environment=str(env.get("name", "nested")),
            overrides=overrides,
            method=raw.get("method", "polyrl"),
            polyrl=PolyRLParams(**_section(raw, "polyrl")),
            learner=LearnerSettings(**_section(raw, "learner")),
            episodes=int(raw.get("episodes", 20)),
            eval_interval=int(evaluation.get("interval", 1)),
            eval_episodes=int(evaluation.get("episodes", 1)),
            seeds=tuple(seeds),
            master_seed=int(raw.get("master_seed", 0)),
            coverage_cell=float(raw.get("coverage_cell", 2.0)),
            record_trajectories=bool(record.get("trajectories", True)),
            record_decisions=bool(record.get("decisions", False)),
            record_weights=bool(record.get("weights", True)),
            output_dir=str(raw.get("output_dir", "runs/default")),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError, DomainError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML in {path}: {exc}") from exc
    return config_from_dict(raw)


def dump_config(config: ExperimentConfig) -> str:
    return yaml.safe_dump(config.to_dict(), sort_keys=True)
