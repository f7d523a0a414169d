"""PolyRL behaviour policy.

The policy alternates between persistent exploratory segments and steps of
a supplied target policy. While exploring, every newly observed state is
appended to a :class:`~polyrl.chain.GyrationTracker`; the exploratory
segment continues as long as the realised change of the radius of gyration
squared stays between the lower and upper confidence bounds. While
exploiting, a random draw ``kappa`` is compared to the episode's ``delta``
to decide between another greedy step and a fresh exploratory segment.

Typical step loop::

    policy.begin_episode(episode, s0)
    while not done:
        action, decision = policy.next_action(s, target)
        s, r, done = env.step(action)
        policy.observe_transition(s)
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import bounds
from .bounds import BoundInputs
from .chain import GyrationTracker, as_vector
from .errors import DomainError
from .sampler import ActionSpace, sample_action, sample_eta

log = logging.getLogger(__name__)

COS_FLOOR = 1e-6
COS_CEIL = 1.0 - 1e-6


class Mode(enum.Enum):
    EXPLORING = "exploring"
    EXPLOITING = "exploiting"


class Branch(str, enum.Enum):
    ACCEPT_SHORT = "accept_short"  # segment too short for the bounds
    ACCEPT = "accept"  # change within [LB, UB]
    VIOLATION = "violation"  # change outside [LB, UB]
    OBTUSE = "obtuse"  # consecutive state bonds at an obtuse angle
    BOUND_ERROR = "bound_error"  # bounds undefined for the segment statistics
    GREEDY = "greedy"  # exploiting, kappa <= delta
    RESTART = "restart"  # exploiting, kappa > delta: new segment


@dataclass(frozen=True)
class PolyRLParams:
    beta: float = 0.01
    theta: float = 0.2
    sigma_sq: float = 1e-3
    switch_distribution: str = "normal"
    break_on_obtuse_angle: bool = False
    min_segment_states: int = 3

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise DomainError(f"beta must lie in (0, 1), got {self.beta!r}")
        if not 0.0 < self.theta < math.pi / 2:
            raise DomainError(f"theta must lie in (0, pi/2), got {self.theta!r}")
        if self.sigma_sq < 0:
            raise DomainError("sigma_sq must be >= 0")
        if self.switch_distribution not in ("normal", "uniform"):
            raise DomainError(f"unknown switch distribution {self.switch_distribution!r}")
        if self.min_segment_states < 3:
            raise DomainError("min_segment_states must be >= 3")


@dataclass(frozen=True)
class Decision:
    branch: Branch
    mode: Mode  # mode after the decision
    delta_ug2: float = math.nan
    lb: float = math.nan
    ub: float = math.nan

    @property
    def greedy(self) -> bool:
        return self.branch in (Branch.GREEDY, Branch.VIOLATION, Branch.OBTUSE, Branch.BOUND_ERROR)


@dataclass
class ExplorationState:
    mode: Mode
    segment: GyrationTracker
    last_action: np.ndarray
    episode: int
    delta: float
    greedy_steps: int = 0
    exploratory_steps: int = 0
    segments: int = 1
    anomalies: int = 0
    pending: tuple[BoundInputs | None, float] | None = field(default=None, repr=False)


def segment_estimates(tracker: GyrationTracker) -> tuple[float, float]:
    """Online ``(b0^2, Lp)`` estimates of a segment.

    ``b0^2`` is the mean squared bond length. ``Lp`` comes from the mean
    cosine of consecutive bonds, clamped into ``[COS_FLOOR, COS_CEIL]``;
    with no usable bond pair the floor applies.
    """
    mean_cos = tracker.mean_cos
    c = COS_FLOOR if mean_cos is None else min(COS_CEIL, max(COS_FLOOR, mean_cos))
    return tracker.mean_bond_sq, 1.0 / abs(math.log(c))


def bound_inputs(tracker: GyrationTracker, delta: float) -> BoundInputs:
    b0_sq, lp = segment_estimates(tracker)
    w = tracker.weighted_bond_sum
    return BoundInputs(
        n_states=tracker.count,
        ug2=tracker.ug2,
        weighted_bond_sum_norm_sq=float(w @ w),
        b0_sq=b0_sq,
        lp=lp,
        delta=bounds.clamp_delta(delta),
    )


Target = Callable[[np.ndarray], np.ndarray]


class PolyRLPolicy:
    """Behaviour policy wrapping a target policy with persistent exploration."""

    def __init__(self, params: PolyRLParams, space: ActionSpace, rng: np.random.Generator):
        self.params = params
        self.space = space
        self.rng = rng
        self.state: ExplorationState | None = None

    def begin_episode(self, episode: int, s0, a0=None) -> ExplorationState:
        if episode < 0:
            raise DomainError("episode must be >= 0")
        a0 = self.space.uniform(self.rng) if a0 is None else np.asarray(a0, dtype=np.float64)
        old = self.state
        self.state = ExplorationState(
            mode=Mode.EXPLORING,
            segment=GyrationTracker.seeded(s0),
            last_action=a0,
            episode=episode,
            delta=bounds.delta_schedule(self.params.beta, episode),
        )
        if old is not None:
            # counters accumulate across episodes
            self.state.greedy_steps = old.greedy_steps
            self.state.exploratory_steps = old.exploratory_steps
            self.state.segments = old.segments + 1
            self.state.anomalies = old.anomalies
        return self.state

    def observe_transition(self, next_obs) -> float | None:
        """Feed the newly reached state; returns the cached change of U_g^2."""
        st = self._require_state()
        if st.mode is not Mode.EXPLORING:
            return None
        tracker = st.segment
        inputs = None
        if tracker.count >= self.params.min_segment_states:
            inputs = bound_inputs(tracker, st.delta)
        delta_ug2 = tracker.append(next_obs)
        st.pending = (inputs, delta_ug2)
        return delta_ug2

    def next_action(self, obs, target: Target) -> tuple[np.ndarray, Decision]:
        st = self._require_state()
        if st.mode is Mode.EXPLOITING:
            action, decision = self._exploit_step(obs, target)
        else:
            action, decision = self._explore_step(obs, target)
        st.last_action = np.asarray(action, dtype=np.float64)
        if decision.greedy:
            st.greedy_steps += 1
        else:
            st.exploratory_steps += 1
        return st.last_action, decision

    # ------------------------------------------------------------------

    def _require_state(self) -> ExplorationState:
        if self.state is None:
            raise RuntimeError("begin_episode must be called first")
        return self.state

    def _persistent_action(self) -> np.ndarray:
        eta = sample_eta(self.params.theta, self.params.sigma_sq, self.rng)
        return sample_action(self.state.last_action, eta, self.space, self.rng)

    def _draw_kappa(self) -> float:
        if self.params.switch_distribution == "normal":
            return float(self.rng.standard_normal())
        return float(self.rng.uniform())

    def _exploit_step(self, obs, target: Target):
        st = self.state
        if self._draw_kappa() <= st.delta:
            return target(obs), Decision(Branch.GREEDY, Mode.EXPLOITING)
        st.segment = GyrationTracker.seeded(as_vector(obs))
        st.mode = Mode.EXPLORING
        st.pending = None
        st.segments += 1
        return self._persistent_action(), Decision(Branch.RESTART, Mode.EXPLORING)

    def _explore_step(self, obs, target: Target):
        st = self.state
        pending, st.pending = st.pending, None
        if pending is None or pending[0] is None:
            return self._persistent_action(), Decision(Branch.ACCEPT_SHORT, Mode.EXPLORING)
        inputs, delta_ug2 = pending
        try:
            lb = bounds.lower_bound(inputs)
            ub = bounds.upper_bound(inputs)
        except DomainError as exc:
            log.debug("bound evaluation failed (%s); switching to target policy", exc)
            st.mode = Mode.EXPLOITING
            return target(obs), Decision(Branch.BOUND_ERROR, Mode.EXPLOITING, delta_ug2)
        if lb > ub:
            st.anomalies += 1
            log.warning("lower bound %.6g exceeds upper bound %.6g", lb, ub)

        seg = st.segment
        if self.params.break_on_obtuse_angle and seg.last_cos is not None and seg.last_cos < 0:
            st.mode = Mode.EXPLOITING
            return target(obs), Decision(Branch.OBTUSE, Mode.EXPLOITING, delta_ug2, lb, ub)
        if lb <= delta_ug2 <= ub:
            return self._persistent_action(), Decision(Branch.ACCEPT, Mode.EXPLORING, delta_ug2, lb, ub)
        st.mode = Mode.EXPLOITING
        return target(obs), Decision(Branch.VIOLATION, Mode.EXPLOITING, delta_ug2, lb, ub)
