"""Chain geometry: ideal polymer models, radius of gyration and ensemble statistics.

States and bond vectors are plain float64 numpy arrays. A trajectory of
``n`` states ``s_0 .. s_{n-1}`` has ``n - 1`` bonds ``w_i = s_i - s_{i-1}``
(bonds are numbered from 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, DomainError, InsufficientDataError

ZERO_BOND = 1e-12


def as_vector(x) -> np.ndarray:
    v = np.array(x, dtype=np.float64).reshape(-1)
    if v.size == 0:
        raise DimensionError("vector must have dimension >= 1")
    if not math.isfinite(float(v.sum())) and not np.isfinite(v).all():
        raise ValueError(f"non-finite vector component in {v!r}")
    return v


def persistence_number(theta: float) -> float:
    """Correlation length ``1/|ln cos(theta)|`` of a freely rotating chain."""
    if not 0.0 < theta < math.pi / 2:
        raise DomainError(f"theta must lie in (0, pi/2), got {theta!r}")
    return 1.0 / abs(math.log(math.cos(theta)))


def effective_bond_length_sq(theta: float, b0: float) -> float:
    """Squared effective bond length ``b0^2 (1 + cos t) / (1 - cos t)``."""
    if not 0.0 < theta <= math.pi:
        raise DomainError(f"theta must lie in (0, pi], got {theta!r}")
    if b0 <= 0:
        raise DomainError("b0 must be positive")
    c = math.cos(theta)
    return b0 * b0 * (1.0 + c) / (1.0 - c)


def expansion_ratio(lp: float) -> float:
    """``(1 + e^{-1/lp}) / (1 - e^{-1/lp})``, the FRC/FJC expansion factor."""
    if lp <= 0:
        raise DomainError("lp must be positive")
    q = math.exp(-1.0 / lp)
    return (1.0 + q) / (1.0 - q)


def gyration_squared_batch(states) -> float:
    """Radius of gyration squared with the ``n - 1`` divisor.

    This is the brute-force reference the incremental tracker is checked
    against, so it deliberately recomputes everything from the states.
    """
    x = np.asarray(states, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    if n < 2:
        raise InsufficientDataError("need at least two states")
    center = x.mean(axis=0)
    return float(np.sum((x - center) ** 2) / (n - 1))


def center_offset_via_bonds(bonds, new_bond) -> np.ndarray:
    """Offset of the next state from the current center of mass, from bonds only.

    ``bonds`` are ``w_1 .. w_{n-1}`` of an ``n``-state trajectory and
    ``new_bond`` is ``w_n``; returns ``w_n + (1/n) sum_i i w_i``.
    """
    w = np.asarray(bonds, dtype=np.float64)
    if w.size == 0:
        raise InsufficientDataError("bond list is empty")
    if w.ndim == 1:
        w = w[:, None]
    new = np.asarray(new_bond, dtype=np.float64).reshape(-1)
    if new.shape[0] != w.shape[1]:
        raise DimensionError("new bond dimension differs from bond list")
    n = w.shape[0] + 1
    weights = np.arange(1, n, dtype=np.float64)
    return new + (weights @ w) / n


@dataclass
class Chain:
    """An ordered sequence of states; bonds are derived on demand."""

    states: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.states, dtype=np.float64)
        if s.ndim == 1:
            s = s[:, None]
        if s.ndim != 2 or s.shape[0] < 1:
            raise DimensionError("states must be an (n, d) array with n >= 1")
        self.states = s

    @classmethod
    def from_bonds(cls, bonds, origin=None) -> Chain:
        w = np.asarray(bonds, dtype=np.float64)
        if w.ndim == 1:
            w = w[:, None]
        start = np.zeros(w.shape[1]) if origin is None else as_vector(origin)
        return cls(np.vstack([start, start + np.cumsum(w, axis=0)]))

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @property
    def bonds(self) -> np.ndarray:
        return np.diff(self.states, axis=0)

    def end_to_end(self) -> np.ndarray:
        return self.states[-1] - self.states[0]

    def gyration_squared(self) -> float:
        return gyration_squared_batch(self.states)

    def __len__(self):
        return self.states.shape[0]


@dataclass
class GyrationTracker:
    """Running record of a state trajectory segment.

    ``append`` updates the radius of gyration squared in O(d) using
    ``U'^2 = (n-2)/(n-1) U^2 + ||s - c||^2 / n`` where ``n`` is the new state
    count and ``c`` the old center, together with the bond statistics the
    sensitivity bounds need.
    """

    dim: int
    count: int = 0
    center: np.ndarray = field(default=None, repr=False)
    ug2: float = 0.0
    weighted_bond_sum: np.ndarray = field(default=None, repr=False)
    sum_bond_sq: float = 0.0
    sum_cos: float = 0.0
    n_cos: int = 0
    last_state: np.ndarray | None = field(default=None, repr=False)
    last_bond: np.ndarray | None = field(default=None, repr=False)
    last_cos: float | None = None

    def __post_init__(self):
        if self.center is None:
            self.center = np.zeros(self.dim)
        if self.weighted_bond_sum is None:
            self.weighted_bond_sum = np.zeros(self.dim)

    @classmethod
    def seeded(cls, state) -> GyrationTracker:
        s = as_vector(state)
        tracker = cls(dim=s.shape[0])
        tracker.append(s)
        return tracker

    @property
    def n_bonds(self) -> int:
        return max(self.count - 1, 0)

    @property
    def mean_bond_sq(self) -> float:
        return self.sum_bond_sq / self.n_bonds if self.n_bonds else 0.0

    @property
    def mean_cos(self) -> float | None:
        return self.sum_cos / self.n_cos if self.n_cos else None

    def offset_sq(self, state) -> float:
        """``||state - center||^2`` for a prospective next state."""
        d = as_vector(state) - self.center
        return float(d @ d)

    def append(self, state) -> float:
        """Add a state; returns the change in the radius of gyration squared."""
        s = as_vector(state)
        if s.shape[0] != self.dim:
            raise DimensionError(f"expected dimension {self.dim}, got {s.shape[0]}")
        if self.count == 0:
            self.count = 1
            self.center = s.copy()
            self.last_state = s.copy()
            return 0.0

        n = self.count + 1
        diff = s - self.center
        new_ug2 = (n - 2) / (n - 1) * self.ug2 + float(diff @ diff) / n
        delta = new_ug2 - self.ug2

        bond = s - self.last_state
        bond_sq = float(bond @ bond)
        self.weighted_bond_sum += (n - 1) * bond
        self.sum_bond_sq += bond_sq
        self.last_cos = None
        if self.last_bond is not None:
            prev_sq = float(self.last_bond @ self.last_bond)
            if math.sqrt(prev_sq) >= ZERO_BOND and math.sqrt(bond_sq) >= ZERO_BOND:
                cos = float(self.last_bond @ bond) / math.sqrt(prev_sq * bond_sq)
                cos = min(1.0, max(-1.0, cos))
                self.sum_cos += cos
                self.n_cos += 1
                self.last_cos = cos

        self.center = self.center + diff / n
        self.ug2 = new_ug2
        self.count = n
        self.last_state = s
        self.last_bond = bond
        return delta

    def copy(self) -> GyrationTracker:
        return GyrationTracker(
            dim=self.dim,
            count=self.count,
            center=self.center.copy(),
            ug2=self.ug2,
            weighted_bond_sum=self.weighted_bond_sum.copy(),
            sum_bond_sq=self.sum_bond_sq,
            sum_cos=self.sum_cos,
            n_cos=self.n_cos,
            last_state=None if self.last_state is None else self.last_state.copy(),
            last_bond=None if self.last_bond is None else self.last_bond.copy(),
            last_cos=self.last_cos,
        )


def append_state(tracker: GyrationTracker, state) -> tuple[GyrationTracker, float]:
    """Functional form of :meth:`GyrationTracker.append` (the input is left untouched)."""
    updated = tracker.copy()
    delta = updated.append(state)
    return updated, delta


# --------------------------------------------------------------------------
# Ideal chain generators
# --------------------------------------------------------------------------


def _unit_vectors(rng: np.random.Generator, shape: tuple[int, ...], dim: int) -> np.ndarray:
    if dim == 1:
        return rng.choice([-1.0, 1.0], size=shape + (1,))
    g = rng.standard_normal(shape + (dim,))
    norms = np.linalg.norm(g, axis=-1, keepdims=True)
    bad = norms[..., 0] < 1e-12
    while np.any(bad):
        g[bad] = rng.standard_normal((int(bad.sum()), dim))
        norms = np.linalg.norm(g, axis=-1, keepdims=True)
        bad = norms[..., 0] < 1e-12
    return g / norms


def _check_chain_args(dim: int, n_bonds: int, b0: float) -> None:
    if dim < 1:
        raise DomainError("dim must be >= 1")
    if n_bonds < 1:
        raise DomainError("n_bonds must be >= 1")
    if not b0 > 0:
        raise DomainError("b0 must be positive")


def fjc_bonds(n_chains: int, dim: int, n_bonds: int, b0: float, rng: np.random.Generator) -> np.ndarray:
    """Bond vectors of ``n_chains`` freely-jointed chains, shape ``(n_chains, n_bonds, dim)``."""
    _check_chain_args(dim, n_bonds, b0)
    return b0 * _unit_vectors(rng, (n_chains, n_bonds), dim)


def _orthogonal_unit(u: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """A uniformly oriented unit vector orthogonal to each row of ``u``."""
    m, dim = u.shape
    if dim == 2:
        perp = np.stack([-u[:, 1], u[:, 0]], axis=1)
        sign = rng.choice([-1.0, 1.0], size=(m, 1))
        return sign * perp
    g = rng.standard_normal((m, dim))
    g -= np.einsum("md,md->m", g, u)[:, None] * u
    norms = np.sqrt(np.einsum("md,md->m", g, g))
    bad = norms < 1e-9
    while np.any(bad):
        idx = np.flatnonzero(bad)
        r = rng.standard_normal((idx.size, dim))
        r -= np.einsum("md,md->m", r, u[idx])[:, None] * u[idx]
        g[idx] = r
        norms[idx] = np.sqrt(np.einsum("md,md->m", r, r))
        bad = norms < 1e-9
    g /= norms[:, None]
    # second pass removes the round-off component along u
    g -= np.einsum("md,md->m", g, u)[:, None] * u
    return g / np.sqrt(np.einsum("md,md->m", g, g))[:, None]


def frc_bonds(
    n_chains: int, dim: int, n_bonds: int, b0: float, theta: float, rng: np.random.Generator
) -> np.ndarray:
    """Bond vectors of freely-rotating chains with fixed bond angle ``theta``.

    The first bond is uniform on the sphere; each subsequent bond is rotated
    by ``theta`` from its predecessor towards a uniformly random direction
    of the orthogonal complement (a fair sign in 2D).
    """
    _check_chain_args(dim, n_bonds, b0)
    if dim < 2:
        raise DomainError("freely rotating chains need dim >= 2")
    if not 0.0 < theta <= math.pi:
        raise DomainError("theta must lie in (0, pi]")
    c, s = math.cos(theta), math.sin(theta)
    u = _unit_vectors(rng, (n_chains,), dim)
    out = np.empty((n_chains, n_bonds, dim))
    out[:, 0] = u
    for i in range(1, n_bonds):
        u = c * u + s * _orthogonal_unit(u, rng)
        u /= np.sqrt(np.einsum("md,md->m", u, u))[:, None]
        out[:, i] = u
    return b0 * out


def generate_fjc(dim: int, n_bonds: int, b0: float, rng: np.random.Generator) -> Chain:
    return Chain.from_bonds(fjc_bonds(1, dim, n_bonds, b0, rng)[0])


def generate_frc(dim: int, n_bonds: int, b0: float, theta: float, rng: np.random.Generator) -> Chain:
    return Chain.from_bonds(frc_bonds(1, dim, n_bonds, b0, theta, rng)[0])


# --------------------------------------------------------------------------
# Ensemble statistics
# --------------------------------------------------------------------------


def _lag_products(bonds: np.ndarray, max_lag: int) -> np.ndarray:
    """Per-chain mean of ``w_i . w_{i+k}`` for ``k = 0..max_lag`` via FFT."""
    m, n, d = bonds.shape
    size = 1 << int(math.ceil(math.log2(n + max_lag + 1)))
    acc = np.zeros((m, max_lag + 1))
    for j in range(d):
        f = np.fft.rfft(bonds[:, :, j], n=size, axis=1)
        acc += np.fft.irfft(f * np.conj(f), n=size, axis=1)[:, : max_lag + 1]
    return acc / (n - np.arange(max_lag + 1))


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    x = np.asarray(x, dtype=np.float64)
    if x.size < 2:
        return float(x.mean()), float("nan")
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


@dataclass
class EnsembleStats:
    """Ensemble averages with Monte Carlo standard errors."""

    n_chains: int
    n_bonds: int
    mean_bond_sq: float
    corr: np.ndarray
    corr_se: np.ndarray
    end_to_end_sq: float
    end_to_end_sq_se: float
    end_to_end: float
    end_to_end_se: float
    gyration_sq: float
    gyration_sq_se: float
    gyration: float
    gyration_se: float


class _PerChain:
    """Per-chain summaries; concatenated across batches before averaging."""

    def __init__(self, bonds: np.ndarray, max_lag: int):
        m, n, d = bonds.shape
        states = np.concatenate([np.zeros((m, 1, d)), np.cumsum(bonds, axis=1)], axis=1)
        ete = states[:, -1]
        centered = states - states.mean(axis=1, keepdims=True)
        self.bond_sq = np.einsum("mnd,mnd->m", bonds, bonds) / n
        self.lag = _lag_products(bonds, max_lag)
        self.ete_sq = np.einsum("md,md->m", ete, ete)
        self.ug2 = np.einsum("mnd,mnd->m", centered, centered) / n  # n + 1 states


def _summarize(parts: list[_PerChain], n_bonds: int) -> EnsembleStats:
    bond_sq = np.concatenate([p.bond_sq for p in parts])
    lag = np.concatenate([p.lag for p in parts])
    ete_sq = np.concatenate([p.ete_sq for p in parts])
    ug2 = np.concatenate([p.ug2 for p in parts])
    norm = bond_sq.mean()
    m = lag.shape[0]
    corr = lag.mean(axis=0) / norm
    corr_se = lag.std(axis=0, ddof=1) / math.sqrt(m) / norm if m > 1 else np.full(corr.shape, np.nan)
    e2, e2se = _mean_se(ete_sq)
    e1, e1se = _mean_se(np.sqrt(ete_sq))
    g2, g2se = _mean_se(ug2)
    g1, g1se = _mean_se(np.sqrt(ug2))
    return EnsembleStats(m, n_bonds, float(norm), corr, corr_se, e2, e2se, e1, e1se, g2, g2se, g1, g1se)


def _stack_bonds(chains) -> np.ndarray:
    if isinstance(chains, np.ndarray):
        bonds = np.asarray(chains, dtype=np.float64)
        if bonds.ndim != 3:
            raise DimensionError("bond array must have shape (chains, bonds, dim)")
        return bonds
    chains = list(chains)
    if not chains:
        raise InsufficientDataError("ensemble is empty")
    shapes = {c.states.shape for c in chains}
    if len(shapes) != 1:
        raise DimensionError("chains must share length and dimension")
    return np.stack([c.bonds for c in chains])


def ensemble_stats(chains, max_lag: int) -> EnsembleStats:
    """Correlation function, end-to-end and gyration averages of an ensemble.

    ``chains`` is a sequence of :class:`Chain` or a bond array of shape
    ``(n_chains, n_bonds, dim)``. ``corr[k]`` is the mean over chains and
    positions of ``w_i . w_{i+k}`` divided by the mean squared bond length.
    """
    bonds = _stack_bonds(chains)
    if bonds.shape[0] == 0:
        raise InsufficientDataError("ensemble is empty")
    n_bonds = bonds.shape[1]
    if max_lag < 0 or max_lag >= n_bonds:
        raise DomainError(f"max_lag must lie in [0, {n_bonds - 1}]")
    return _summarize([_PerChain(bonds, max_lag)], n_bonds)


def chain_campaign(
    model: str,
    dim: int,
    n_bonds: int,
    b0: float,
    n_chains: int,
    max_lag: int,
    rng: np.random.Generator,
    theta: float | None = None,
    batch: int = 500,
) -> EnsembleStats:
    """Generate an FJC/FRC ensemble in batches and summarize it.

    Batching keeps memory bounded for long chains; the result equals
    ``ensemble_stats`` on the concatenated ensemble.
    """
    if model not in ("fjc", "frc"):
        raise DomainError(f"unknown chain model {model!r}")
    if model == "frc" and theta is None:
        raise DomainError("frc needs theta")
    if max_lag < 0 or max_lag >= n_bonds:
        raise DomainError(f"max_lag must lie in [0, {n_bonds - 1}]")
    parts = []
    done = 0
    while done < n_chains:
        m = min(batch, n_chains - done)
        if model == "fjc":
            bonds = fjc_bonds(m, dim, n_bonds, b0, rng)
        else:
            bonds = frc_bonds(m, dim, n_bonds, b0, theta, rng)
        parts.append(_PerChain(bonds, max_lag))
        done += m
    return _summarize(parts, n_bonds)
