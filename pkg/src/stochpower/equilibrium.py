"""Discount bound under which SMU with grim-trigger punishment is an equilibrium.

For each player the bound is ``delta_i / (cap + delta_i)`` where ``delta_i`` is
the expected SMU utility minus the expected one-shot NE utility and ``cap``
is the best utility a deviator can reach in one stage,
``R eta_max f(beta*) / (sigma2 beta*)``. SMU is supported whenever the
discount factor does not exceed the smallest per-player bound.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import FiniteMarkovProcess, joint_state_distribution
from .game import GameConfig, best_response, efficiency, stage_outcome
from .strategies import STAGE_RULES

__all__ = [
    "BudgetExceeded",
    "EquilibriumReport",
    "ExpectedUtility",
    "MinmaxLevel",
    "deviation_cap",
    "equilibrium_report",
    "expected_utility",
    "lambda_max",
    "minmax_level",
]


class BudgetExceeded(RuntimeError):
    """An enumeration would exceed its configured evaluation budget."""


@dataclass
class ExpectedUtility:
    mean: np.ndarray
    stderr: np.ndarray
    exact: bool


def _rule(rule):
    return STAGE_RULES[rule] if isinstance(rule, str) else rule


def expected_utility(rule, process, cfg: GameConfig, method: str = "auto",
                     n_samples: int = 1_000_000, seed: int = 0) -> ExpectedUtility:
    """Per-player stationary expectation of the stage utility under ``rule``.

    ``rule`` maps stacked joint states ``(N, K)`` to profiles, or names one of
    ``STAGE_RULES``. Finite chains are summed exactly over all joint states
    unless ``method="mc"``; interval processes always use Monte Carlo.
    """
    rule = _rule(rule)
    finite = isinstance(process, FiniteMarkovProcess)
    if method == "auto":
        method = "exact" if finite and process.n_states ** cfg.K <= 1_000_000 else "mc"
    if method == "exact":
        if not finite:
            raise ValueError("exact expectation needs a finite-state process")
        states, probs = joint_state_distribution(process, cfg.K)
        u = stage_outcome(rule(states, cfg), states, cfg).utility
        return ExpectedUtility(probs @ u, np.zeros(cfg.K), True)
    if method != "mc":
        raise ValueError(f"unknown method {method!r}")
    states = process.reseed(seed).sample_states(n_samples)
    u = stage_outcome(rule(states, cfg), states, cfg).utility
    return ExpectedUtility(u.mean(axis=0), u.std(axis=0, ddof=1) / np.sqrt(n_samples), False)


def deviation_cap(cfg: GameConfig, eta_max: float) -> np.ndarray:
    """Per-player ``R_i eta_max f(beta*) / (sigma2 beta*)`` with ``beta* = a_i``."""
    beta = cfg.a
    return cfg.R * eta_max / cfg.sigma2 * efficiency(beta, cfg.a) / beta


def lambda_max(expected_smu, expected_ne, cap):
    """Per-player bounds, their minimum, and the players SMU cannot support."""
    delta = np.asarray(expected_smu, dtype=float) - np.asarray(expected_ne, dtype=float)
    cap = np.broadcast_to(np.asarray(cap, dtype=float), delta.shape)
    unsupported = delta <= 0
    with np.errstate(divide="ignore", invalid="ignore"):
        bounds = np.where(unsupported, 0.0, delta / (cap + delta))
    return bounds, float(bounds.min()), unsupported


@dataclass
class EquilibriumReport:
    expected_smu: np.ndarray
    expected_ne: np.ndarray
    deviation_cap: np.ndarray
    bounds: np.ndarray
    lambda_max: float
    unsupported: np.ndarray
    exact: bool

    @property
    def delta(self) -> np.ndarray:
        return self.expected_smu - self.expected_ne

    def holds_for(self, lam: float) -> bool:
        return bool(lam <= self.lambda_max and not self.unsupported.any())


def equilibrium_report(process, cfg: GameConfig, **kwargs) -> EquilibriumReport:
    smu = expected_utility("smu", process, cfg, **kwargs)
    ne = expected_utility("nash", process, cfg, **kwargs)
    cap = deviation_cap(cfg, process.gain_bounds[1])
    bounds, lam, unsupported = lambda_max(smu.mean, ne.mean, cap)
    return EquilibriumReport(smu.mean, ne.mean, cap, bounds, lam, unsupported, smu.exact)


@dataclass
class MinmaxLevel:
    grid_value: float
    closed_form: float
    tolerance: float

    @property
    def agree(self) -> bool:
        return abs(self.grid_value - self.closed_form) <= self.tolerance


def minmax_level(i: int, process: FiniteMarkovProcess, cfg: GameConfig, grid: int = 101,
                 budget: int = 10_000_000) -> MinmaxLevel:
    """Utility player ``i`` can guarantee when the others try to hold it down.

    Grid route: in each joint state the opponents pick the grid profile that
    minimizes ``i``'s best grid utility. Closed-form route: all opponents at
    ``p_max`` and ``i`` at its exact (capped) best response. Both are averaged
    under the stationary joint law. ``tolerance`` is two grid steps of ``i``'s
    utility around its grid optimum.
    """
    states, probs = joint_state_distribution(process, cfg.K)
    levels = np.linspace(0.0, cfg.p_max, grid)
    n_opp = cfg.K - 1
    if grid ** n_opp * grid * len(states) > budget:
        raise BudgetExceeded(f"minmax grid search needs {grid ** n_opp * grid * len(states)} evaluations")
    others = [j for j in range(cfg.K) if j != i]
    if n_opp:
        opp = np.stack(np.meshgrid(*([levels] * n_opp), indexing="ij"), -1).reshape(-1, n_opp)
    else:
        opp = np.zeros((1, 0))
    grid_vals = np.empty(len(states))
    closed = np.empty(len(states))
    steps = np.empty(len(states))
    for s, eta in enumerate(states):
        interference = opp @ eta[others]  # (M,)
        sinr = levels[None, :] * eta[i] / (interference[:, None] + cfg.sigma2)
        with np.errstate(divide="ignore", invalid="ignore"):
            u = np.where(levels > 0, cfg.R[i] * efficiency(sinr, cfg.a[i]) / np.where(levels > 0, levels, 1), 0.0)
        best = u.max(axis=1)
        m = int(np.argmin(best))
        grid_vals[s] = best[m]
        row = u[m]
        g = int(np.argmax(row))
        steps[s] = max(abs(row[g] - row[max(g - 1, 0)]), abs(row[min(g + 1, grid - 1)] - row[g]))
        i_max = cfg.p_max * eta[others].sum()
        p = best_response(i, i_max, eta[i], cfg)
        gamma = p * eta[i] / (i_max + cfg.sigma2)
        closed[s] = cfg.R[i] * efficiency(gamma, cfg.a[i]) / p
    return MinmaxLevel(float(probs @ grid_vals), float(probs @ closed), float(2 * probs @ steps))
