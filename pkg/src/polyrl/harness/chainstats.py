"""Chain-statistics campaign report with analytic reference columns."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..chain import EnsembleStats, chain_campaign, expansion_ratio, persistence_number
from ..errors import DomainError
from .csvio import write_csv

CORR_HEADER = ["lag", "corr", "corr_se", "corr_ref"]
SUMMARY_HEADER = ["quantity", "value", "se", "reference"]


def bond_cosine(model: str, theta: float | None) -> float:
    return 0.0 if model == "fjc" else math.cos(theta)


def pair_distance_sq(m: np.ndarray, b0: float, c: float) -> np.ndarray:
    """Mean squared distance between states ``m`` bonds apart."""
    m = np.asarray(m, dtype=np.float64)
    if c == 0.0:
        return b0 * b0 * m
    return b0 * b0 * (m * (1 + c) / (1 - c) - 2 * c * (1 - c**m) / (1 - c) ** 2)


def reference_end_to_end_sq(n_bonds: int, b0: float, c: float) -> float:
    return float(pair_distance_sq(n_bonds, b0, c))


def reference_gyration_sq(n_bonds: int, b0: float, c: float) -> float:
    """Ensemble mean of the ``n - 1`` divisor gyration for ``n_bonds + 1`` states."""
    n_states = n_bonds + 1
    m = np.arange(1, n_states)
    pair_sum = float(np.sum((n_states - m) * pair_distance_sq(m, b0, c)))
    return pair_sum / n_states / (n_states - 1)


@dataclass
class ChainReport:
    model: str
    dim: int
    n_bonds: int
    b0: float
    theta: float | None
    stats: EnsembleStats

    def summary_rows(self) -> list[tuple]:
        s, c = self.stats, bond_cosine(self.model, self.theta)
        rows = [
            ("n_chains", float(s.n_chains), math.nan, math.nan),
            ("mean_bond_sq", s.mean_bond_sq, math.nan, self.b0**2),
            ("end_to_end_sq", s.end_to_end_sq, s.end_to_end_sq_se, reference_end_to_end_sq(self.n_bonds, self.b0, c)),
            ("end_to_end", s.end_to_end, s.end_to_end_se, math.nan),
            ("gyration_sq", s.gyration_sq, s.gyration_sq_se, reference_gyration_sq(self.n_bonds, self.b0, c)),
            ("gyration", s.gyration, s.gyration_se, math.nan),
        ]
        if self.model == "frc" and self.theta < math.pi / 2:
            lp = persistence_number(self.theta)
            fjc_ref = self.n_bonds * self.b0**2
            rows.append(("persistence_number", lp, math.nan, lp))
            rows.append(("expansion_ratio", s.end_to_end_sq / fjc_ref, s.end_to_end_sq_se / fjc_ref, expansion_ratio(lp)))
        return rows

    def corr_rows(self) -> list[tuple]:
        c = bond_cosine(self.model, self.theta)
        return [
            (k, float(self.stats.corr[k]), float(self.stats.corr_se[k]), 1.0 if k == 0 else c**k)
            for k in range(self.stats.corr.size)
        ]

    def write(self, out_dir) -> tuple[Path, Path]:
        out = Path(out_dir)
        corr_path = out / f"chain_{self.model}_corr.csv"
        summary_path = out / f"chain_{self.model}_summary.csv"
        write_csv(corr_path, CORR_HEADER, self.corr_rows())
        write_csv(summary_path, SUMMARY_HEADER, self.summary_rows())
        return corr_path, summary_path


def chain_stats(
    model: str,
    dim: int,
    n_bonds: int,
    b0: float,
    theta: float | None,
    n_chains: int,
    seed: int,
    max_lag: int | None = None,
) -> ChainReport:
    if model not in ("fjc", "frc"):
        raise DomainError(f"unknown chain model {model!r}")
    if n_chains < 2:
        raise DomainError("need at least two chains for standard errors")
    if max_lag is None:
        max_lag = min(n_bonds - 1, 200)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    stats = chain_campaign(model, dim, n_bonds, b0, n_chains, max_lag, rng, theta=theta)
    return ChainReport(model, dim, n_bonds, b0, theta, stats)
