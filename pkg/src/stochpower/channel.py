"""Channel-gain processes.

Two processes are provided: gains drawn i.i.d. per stage from an interval,
and a finite-state Markov chain that every player runs independently with
a shared state list and transition matrix. Each process owns a seeded
``numpy.random.Generator``; ``reseed`` returns a fresh copy.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.sparse.csgraph import breadth_first_order

__all__ = [
    "FiniteMarkovProcess",
    "IidIntervalProcess",
    "ReducibleChainError",
    "joint_state_distribution",
    "stationary_distribution",
]


class ReducibleChainError(ValueError):
    pass


@dataclass
class IidIntervalProcess:
    """Gains drawn uniformly on ``[eta_min, eta_max]``, independently per stage and player."""

    eta_min: np.ndarray | float
    eta_max: np.ndarray | float
    n_players: int
    seed: int = 0
    rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        lo = np.broadcast_to(np.asarray(self.eta_min, dtype=float), (self.n_players,)).copy()
        hi = np.broadcast_to(np.asarray(self.eta_max, dtype=float), (self.n_players,)).copy()
        if np.any(lo <= 0) or np.any(hi < lo):
            raise ValueError("need 0 < eta_min <= eta_max")
        self.eta_min, self.eta_max = lo, hi
        self.rng = np.random.default_rng(self.seed)

    @property
    def gain_bounds(self) -> tuple[float, float]:
        return float(self.eta_min.min()), float(self.eta_max.max())

    def reseed(self, seed: int) -> "IidIntervalProcess":
        return replace(self, seed=seed)

    def with_players(self, K: int) -> "IidIntervalProcess":
        if np.ptp(self.eta_min) or np.ptp(self.eta_max):
            raise ValueError("changing the player count needs identical per-player intervals")
        return replace(self, eta_min=self.eta_min[0], eta_max=self.eta_max[0], n_players=K)

    def mean_gain(self) -> np.ndarray:
        return (self.eta_min + self.eta_max) / 2

    def sample_next(self, current=None) -> np.ndarray:
        return self.rng.uniform(self.eta_min, self.eta_max)

    def sample_path(self, T: int, initial=None) -> np.ndarray:
        if initial is not None:
            first = np.asarray(initial, dtype=float)[None, :]
            return np.vstack([first, self.rng.uniform(self.eta_min, self.eta_max, (T - 1, self.n_players))])
        return self.rng.uniform(self.eta_min, self.eta_max, (T, self.n_players))

    def sample_states(self, n: int) -> np.ndarray:
        """``n`` independent draws of the joint state (for Monte Carlo expectations)."""
        return self.rng.uniform(self.eta_min, self.eta_max, (n, self.n_players))


@dataclass
class FiniteMarkovProcess:
    """Per-player Markov chains over a shared, increasing list of gains.

    Without an explicit initial state the chain starts from its stationary
    law, so sample paths are stationary from the first stage.
    """

    states: np.ndarray
    transition: np.ndarray
    n_players: int
    seed: int = 0
    rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=float)
        self.transition = np.asarray(self.transition, dtype=float)
        n = self.states.size
        if self.states.ndim != 1 or n < 1:
            raise ValueError("states must be a non-empty list")
        if np.any(self.states <= 0) or np.any(np.diff(self.states) <= 0):
            raise ValueError("states must be strictly positive and strictly increasing")
        if self.transition.shape != (n, n):
            raise ValueError(f"transition must be {n}x{n}, got {self.transition.shape}")
        if np.any(self.transition < 0):
            raise ValueError("transition entries must be >= 0")
        bad = np.abs(self.transition.sum(axis=1) - 1) > 1e-12
        if np.any(bad):
            raise ValueError(f"transition rows {np.flatnonzero(bad).tolist()} do not sum to 1")
        if self.n_players < 1:
            raise ValueError("n_players must be >= 1")
        cum = np.cumsum(self.transition, axis=1)
        cum[:, -1] = 1.0
        self._cum = cum
        self.rng = np.random.default_rng(self.seed)

    @property
    def n_states(self) -> int:
        return self.states.size

    @property
    def gain_bounds(self) -> tuple[float, float]:
        return float(self.states[0]), float(self.states[-1])

    def reseed(self, seed: int) -> "FiniteMarkovProcess":
        return replace(self, seed=seed)

    def with_players(self, K: int) -> "FiniteMarkovProcess":
        return replace(self, n_players=K)

    def state_index(self, eta) -> np.ndarray:
        eta = np.asarray(eta, dtype=float)
        idx = np.searchsorted(self.states, eta)
        idx = np.minimum(idx, self.n_states - 1)
        if not np.all(self.states[idx] == eta):
            raise ValueError(f"gains {eta} not all in state list {self.states.tolist()}")
        return idx

    def mean_gain(self) -> np.ndarray:
        return np.full(self.n_players, stationary_distribution(self) @ self.states)

    def _step(self, idx: np.ndarray, u: np.ndarray) -> np.ndarray:
        return (self._cum[idx] <= u[..., None]).sum(axis=-1)

    def _initial_index(self) -> np.ndarray:
        pi = stationary_distribution(self)
        u = self.rng.random(self.n_players)
        return np.minimum(np.searchsorted(np.cumsum(pi), u, side="right"), self.n_states - 1)

    def sample_next(self, current=None) -> np.ndarray:
        """Next joint state; a missing ``current`` draws from the stationary law."""
        if current is None:
            return self.states[self._initial_index()]
        idx = self.state_index(current)
        return self.states[self._step(idx, self.rng.random(self.n_players))]

    def sample_path(self, T: int, initial=None) -> np.ndarray:
        """``T`` consecutive joint states, shape ``(T, K)``.

        Consumes the random stream exactly like ``T`` chained ``sample_next``
        calls. The chain is advanced with a prefix scan over the per-step
        transition maps (``F_t[s]`` = next state from ``s`` under draw ``t``),
        which keeps the work vectorized without changing any draw.
        """
        if T < 1:
            raise ValueError("T must be >= 1")
        s0 = self._initial_index() if initial is None else self.state_index(initial)
        if T == 1:
            return self.states[s0][None, :]
        u = self.rng.random((T - 1, self.n_players))
        n = self.n_states
        # maps[k, t, s]: state of player k after step t when it was s before
        maps = self._step(np.arange(n)[None, None, :], u.T[:, :, None])
        d = 1
        while d < T - 1:
            maps[:, d:, :] = np.take_along_axis(maps[:, d:, :], maps[:, :-d, :], axis=2)
            d *= 2
        path_idx = np.empty((T, self.n_players), dtype=np.intp)
        path_idx[0] = s0
        path_idx[1:] = np.take_along_axis(maps, s0[:, None, None], axis=2)[:, :, 0].T
        return self.states[path_idx]

    def sample_states(self, n: int) -> np.ndarray:
        """``n`` independent draws from the joint stationary law."""
        pi = stationary_distribution(self)
        u = self.rng.random((n, self.n_players))
        idx = np.minimum(np.searchsorted(np.cumsum(pi), u, side="right"), self.n_states - 1)
        return self.states[idx]

    def joint_states(self) -> np.ndarray:
        """All joint states in lexicographic order (player 0 most significant)."""
        grid = itertools.product(range(self.n_states), repeat=self.n_players)
        return self.states[np.array(list(grid), dtype=np.intp).reshape(-1, self.n_players)]

    def joint_transition(self) -> np.ndarray:
        """Transition matrix over joint states, ordered as ``joint_states``."""
        P = np.ones((1, 1))
        for _ in range(self.n_players):
            P = np.kron(P, self.transition)
        return P

    def joint_index(self, eta) -> int:
        idx = self.state_index(eta)
        return int(np.ravel_multi_index(tuple(idx), (self.n_states,) * self.n_players))


def _check_irreducible(process: FiniteMarkovProcess) -> None:
    adj = (process.transition > 0).astype(float)
    forward = set(breadth_first_order(adj, 0, directed=True, return_predecessors=False).tolist())
    backward = set(breadth_first_order(adj.T, 0, directed=True, return_predecessors=False).tolist())
    everything = set(range(process.n_states))
    if forward != everything:
        missing = sorted(everything - forward)
        raise ReducibleChainError(
            f"reducible chain: states {process.states[missing].tolist()} "
            f"unreachable from state {process.states[0]}"
        )
    if backward != everything:
        missing = sorted(everything - backward)
        raise ReducibleChainError(
            f"reducible chain: state {process.states[0]} unreachable from states "
            f"{process.states[missing].tolist()}"
        )


def stationary_distribution(process: FiniteMarkovProcess) -> np.ndarray:
    """Unique stationary law of an irreducible chain (linear solve)."""
    _check_irreducible(process)
    P = process.transition
    n = P.shape[0]
    A = P.T - np.eye(n)
    A[-1, :] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    pi = np.linalg.solve(A, rhs)
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    residual = np.abs(pi @ P - pi).max()
    if residual >= 1e-12:
        raise ArithmeticError(f"stationary residual {residual:.3e} too large")
    return pi


def joint_state_distribution(process: FiniteMarkovProcess, K: int | None = None):
    """Product of per-player stationary laws over all ``|states|**K`` joint states.

    Returns ``(gains, probs)`` with ``gains`` of shape ``(n**K, K)``.
    """
    K = process.n_players if K is None else K
    pi = stationary_distribution(process)
    proc = process.with_players(K) if K != process.n_players else process
    probs = np.ones(1)
    for _ in range(K):
        probs = np.kron(probs, pi)
    return proc.joint_states(), probs
