"""High-probability bounds on the change of the radius of gyration squared.

All functions are pure. ``BoundInputs`` describes the segment *before* the
new state arrives: ``n_states`` states, its radius of gyration squared, the
squared norm of ``sum_i i w_i`` over its bonds, the mean squared bond length
and persistence number estimates, and the confidence parameter ``delta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

DELTA_MIN = 1e-6
DELTA_MAX = 1.0 - 1e-6


@dataclass(frozen=True)
class BoundInputs:
    n_states: int
    ug2: float
    weighted_bond_sum_norm_sq: float
    b0_sq: float
    lp: float
    delta: float

    def validate(self) -> None:
        if self.n_states < 3:
            raise DomainError(f"bounds need at least 3 states, got {self.n_states}")
        if not self.ug2 >= 0:
            raise DomainError("ug2 must be non-negative")
        if not self.weighted_bond_sum_norm_sq >= 0:
            raise DomainError("weighted bond sum norm must be non-negative")
        if not self.b0_sq > 0:
            raise DomainError("b0_sq must be positive")
        if not self.lp > 0:
            raise DomainError("lp must be positive")
        if not 0.0 < self.delta < 1.0:
            raise DomainError(f"delta must lie strictly inside (0, 1), got {self.delta!r}")


def lambda_term(inputs: BoundInputs) -> float:
    n = inputs.n_states
    if n < 2:
        raise DomainError("lambda term needs at least 2 states")
    return -inputs.ug2 / (n - 1)


def gamma_term(inputs: BoundInputs) -> float:
    n = inputs.n_states
    if n < 1 or not inputs.b0_sq > 0:
        raise DomainError("gamma term needs n >= 1 and b0_sq > 0")
    return inputs.b0_sq / n + inputs.weighted_bond_sum_norm_sq / n**3


def correlation_sum(n_states: int, lp: float) -> float:
    """``sum_{i=1}^{n-1} i exp(-(n - i)/lp)``, evaluated term by term."""
    i = np.arange(1, n_states, dtype=np.float64)
    return float(np.sum(i * np.exp(-(n_states - i) / lp)))


def upper_bound(inputs: BoundInputs) -> float:
    """Upper confidence bound on the upper local sensitivity."""
    inputs.validate()
    n = inputs.n_states
    extra = 2.0 * inputs.b0_sq / n**2 * correlation_sum(n, inputs.lp)
    return lambda_term(inputs) + (gamma_term(inputs) + extra) / inputs.delta


def lower_bound(inputs: BoundInputs) -> float:
    """Lower confidence bound on the lower local sensitivity.

    The bracket is scaled by ``1 - sqrt(2 - 2 delta)``, so the result equals
    the lambda term at ``delta = 0.5`` and falls below it for smaller delta.
    """
    inputs.validate()
    n = inputs.n_states
    factor = 1.0 - math.sqrt(2.0 - 2.0 * inputs.delta)
    extra = (n - 1) * (n - 2) / n**2 * inputs.b0_sq * math.exp(-(n - 1) / inputs.lp)
    return lambda_term(inputs) + factor * (gamma_term(inputs) + extra)


def delta_schedule(beta: float, episode: int) -> float:
    """``1 - exp(-beta * episode)``; clamp with :func:`clamp_delta` before use."""
    if not 0.0 < beta < 1.0:
        raise DomainError(f"beta must lie in (0, 1), got {beta!r}")
    if episode < 0:
        raise DomainError("episode must be >= 0")
    return 1.0 - math.exp(-beta * episode)


def clamp_delta(delta: float) -> float:
    return min(DELTA_MAX, max(DELTA_MIN, delta))
