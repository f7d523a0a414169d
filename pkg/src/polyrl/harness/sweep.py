"""Grid sweeps over the PolyRL parameters theta, sigma^2 and beta."""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import replace
from pathlib import Path

import numpy as np

from ..errors import ConfigError, DomainError
from .config import ExperimentConfig
from .csvio import write_csv
from .runner import SeedResult, run_experiment

log = logging.getLogger(__name__)

SWEEP_HEADER = [
    "theta", "sigma_sq", "beta", "n_seeds", "n_failed",
    "eval_return_mean", "eval_return_se", "coverage_mean", "coverage_se", "status",
]


def mean_se(values) -> tuple[float, float]:
    x = np.asarray([v for v in values if not math.isnan(v)], dtype=np.float64)
    if x.size == 0:
        return math.nan, math.nan
    if x.size == 1:
        return float(x[0]), math.nan
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def seed_summary(res: SeedResult) -> tuple[float, float]:
    """(mean evaluation return over evaluation points, final coverage) of one seed."""
    ok = [row for row in res.metrics if row[8] == "ok"]
    if res.failed or not ok:
        return math.nan, math.nan
    return float(np.mean([row[3] for row in ok])), float(ok[-1][5])


def point_dir(theta: float, sigma_sq: float, beta: float) -> str:
    return f"theta={theta!r}_sigma_sq={sigma_sq!r}_beta={beta!r}"


def sweep(config: ExperimentConfig, thetas, sigma_sqs, betas, out_dir=None) -> list[tuple]:
    """One ``run_experiment`` per grid point; returns the aggregated rows.

    A grid point whose parameters are invalid or whose run raises is
    recorded with status ``failed`` and the sweep moves on.
    """
    grid = list(itertools.product(thetas, sigma_sqs, betas))
    if not grid:
        raise ConfigError("sweep grid is empty")
    out = Path(out_dir) if out_dir is not None else None
    rows = []
    for theta, sigma_sq, beta in grid:
        theta, sigma_sq, beta = float(theta), float(sigma_sq), float(beta)
        try:
            params = replace(config.polyrl, theta=theta, sigma_sq=sigma_sq, beta=beta)
            point = replace(config, polyrl=params)
            sub = out / point_dir(theta, sigma_sq, beta) if out is not None else None
            results = run_experiment(point, sub)
        except (DomainError, ValueError, FloatingPointError) as exc:
            log.error("grid point theta=%r sigma_sq=%r beta=%r failed: %s", theta, sigma_sq, beta, exc)
            rows.append((theta, sigma_sq, beta, len(config.seeds), len(config.seeds),
                         math.nan, math.nan, math.nan, math.nan, "failed"))
            continue
        summaries = [seed_summary(r) for r in results]
        n_failed = sum(r.failed for r in results)
        ret_m, ret_se = mean_se([s[0] for s in summaries])
        cov_m, cov_se = mean_se([s[1] for s in summaries])
        status = "ok" if n_failed == 0 else ("failed" if n_failed == len(results) else "partial")
        rows.append((theta, sigma_sq, beta, len(results), n_failed, ret_m, ret_se, cov_m, cov_se, status))
    if out is not None:
        write_csv(out / "sweep.csv", SWEEP_HEADER, rows)
    return rows

