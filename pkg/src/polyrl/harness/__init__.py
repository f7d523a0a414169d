"""Experiment orchestration: configs, seeded runs, sweeps, reports and rendering."""

from .chainstats import ChainReport, chain_stats
from .config import ExperimentConfig, LearnerSettings, config_from_dict, load_config
from .pointmass import FirstRewardStudy, first_reward_study
from .render import render_svg, svg_document
from .runner import SeedResult, greedy_rollouts, run_experiment, run_seed, seed_streams
from .sweep import sweep

__all__ = [
    "ChainReport", "ExperimentConfig", "FirstRewardStudy", "LearnerSettings", "SeedResult",
    "chain_stats", "config_from_dict", "first_reward_study", "greedy_rollouts", "load_config",
    "render_svg", "run_experiment", "run_seed", "seed_streams", "svg_document", "sweep",
]
