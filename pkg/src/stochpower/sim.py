"""Seeded episode runner and mechanism comparison."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .game import GameConfig, efficiency, stage_outcome
from .strategies import MECHANISMS, make_mechanism

__all__ = [
    "EpisodeResult",
    "MechanismStat",
    "PolicyError",
    "compare_mechanisms",
    "discount_weights",
    "max_stage_utility",
    "run_episode",
]

TRACE_LENGTH = 1000


class PolicyError(RuntimeError):
    pass


@dataclass
class EpisodeResult:
    discounted: np.ndarray
    average: np.ndarray
    truncation_bound: float
    seed: int
    T: int
    trace: dict | None = None


def discount_weights(lam: float, T: int) -> np.ndarray:
    """``lam (1 - lam)**(t-1)`` for ``t = 1..T``."""
    return lam * (1 - lam) ** np.arange(T)


def max_stage_utility(cfg: GameConfig, eta_max: float) -> float:
    """Largest stage utility any player can get: interference-free best response."""
    return float(np.max(cfg.R * eta_max * efficiency(cfg.a, cfg.a) / (cfg.sigma2 * cfg.a)))


def _check_powers(p, cfg, offset=0):
    tol = 1e-12 * cfg.p_max
    bad = (p < 0) | (p > cfg.p_max + tol) | ~np.isfinite(p)
    if np.any(bad):
        t, i = np.argwhere(np.atleast_2d(bad))[0]
        raise PolicyError(
            f"stage {offset + t + 1}: player {i} emitted power {np.atleast_2d(p)[t, i]!r} "
            f"outside [0, {cfg.p_max}]"
        )


def run_episode(policy, process, cfg: GameConfig, T: int, seed: int, trace: bool = False) -> EpisodeResult:
    """Play ``T`` stages of ``policy`` on a fresh copy of ``process`` seeded with ``seed``."""
    if T < 1:
        raise ValueError("T must be >= 1")
    path = process.reseed(seed).sample_path(T)
    policy.reset()
    if getattr(policy, "adaptive", True):
        powers = np.empty(path.shape)
        last = None
        for t in range(T):
            p = np.asarray(policy.act(t, path[t], path[t - 1] if t else None, last), dtype=float)
            _check_powers(p[None, :], cfg, offset=t)
            powers[t] = p
            last = p
    else:
        powers = np.asarray(policy.batch(path), dtype=float)
        _check_powers(powers, cfg)
    out = stage_outcome(powers, path, cfg)
    w = discount_weights(cfg.lam, T)
    discounted = w @ out.utility
    average = out.utility.mean(axis=0)
    bound = (1 - cfg.lam) ** T * max_stage_utility(cfg, process.gain_bounds[1])
    rec = None
    if trace:
        start = max(0, T - TRACE_LENGTH)
        rec = {
            "stage": np.arange(start, T) + 1,
            "eta": path[start:],
            "power": powers[start:],
            "sinr": out.sinr[start:],
            "utility": out.utility[start:],
        }
    return EpisodeResult(discounted, average, float(bound), seed, T, rec)


@dataclass
class MechanismStat:
    K: int
    mechanism: str
    mean: float
    stderr: float
    per_seed: np.ndarray

    @property
    def n_seeds(self) -> int:
        return len(self.per_seed)


def compare_mechanisms(process, cfg: GameConfig, K_range, T: int, seeds, mechanisms=MECHANISMS,
                       exhaustive: bool = False):
    """Mean per-player average utility of each mechanism for each player count.

    All mechanisms of a given (K, seed) see the same channel trajectory.
    """
    seeds = sorted(seeds)
    if not seeds:
        raise ValueError("need at least one seed")
    rows = []
    for K in K_range:
        cfg_k = cfg.with_players(K)
        proc_k = process.with_players(K)
        policies = [make_mechanism(m, cfg_k, proc_k, exhaustive) for m in mechanisms]
        per_seed = np.empty((len(mechanisms), len(seeds)))
        for j, seed in enumerate(seeds):
            path = proc_k.reseed(seed).sample_path(T)
            for m, policy in enumerate(policies):
                p = policy.batch(path)
                _check_powers(p, cfg_k)
                per_seed[m, j] = stage_outcome(p, path, cfg_k).utility.mean()
        for m, name in enumerate(mechanisms):
            vals = per_seed[m]
            se = vals.std(ddof=1) / np.sqrt(len(vals)) if len(vals) > 1 else float("nan")
            rows.append(MechanismStat(K, name, float(vals.mean()), float(se), vals))
    return rows
