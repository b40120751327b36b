"""Stage-game mathematics for energy-efficient power control.

K transmitters share a multiple-access channel. Player ``i`` picks a power
``p_i`` and sees SINR ``gamma_i = p_i eta_i / (sum_{j != i} p_j eta_j + sigma2)``;
its stage utility is ``R_i f(gamma_i) / p_i`` bit/J with the efficiency
function ``f(gamma) = exp(-a / gamma)``, ``a = 2**R - 1``.

Channel states and power profiles are plain numpy arrays whose last axis
indexes players, so every function here also works row-wise on stacks of
stages of shape ``(T, K)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy import optimize

__all__ = [
    "GameConfig",
    "NashEquilibrium",
    "SolverError",
    "StageOutcome",
    "best_response",
    "default_power_cap",
    "efficiency",
    "efficiency_derivative",
    "gamma_tilde_residual",
    "nash_powers",
    "one_shot_nash",
    "operating_point_powers",
    "operating_point_rows",
    "solve_gamma_tilde",
    "stage_outcome",
]


class SolverError(RuntimeError):
    """A root bracket had no sign change or the solver did not converge."""


@dataclass(frozen=True, eq=False)
class GameConfig:
    """Constants of the stage game.

    ``R`` may be a scalar (equal rates) or one rate per player.
    ``lam`` is the discount factor: stage ``t`` gets weight ``lam (1 - lam)**(t-1)``.
    """

    K: int
    R: np.ndarray | float
    sigma2: float
    p_max: float
    lam: float = 0.05
    a: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 1:
            raise ValueError(f"K must be an integer >= 1, got {self.K}")
        rates = np.broadcast_to(np.asarray(self.R, dtype=float), (self.K,)).copy()
        if np.any(rates <= 0):
            raise ValueError("rates R must be > 0")
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be > 0")
        if not self.p_max > 0:
            raise ValueError("p_max must be > 0")
        if not 0 < self.lam < 1:
            raise ValueError("lam must lie in (0, 1)")
        rates.flags.writeable = False
        a = np.exp2(rates) - 1.0
        a.flags.writeable = False
        object.__setattr__(self, "K", int(self.K))
        object.__setattr__(self, "R", rates)
        object.__setattr__(self, "a", a)

    @property
    def equal_rates(self) -> bool:
        return bool(np.all(self.R == self.R[0]))

    def with_players(self, K: int) -> "GameConfig":
        """Same constants for a different player count (needs equal rates)."""
        if not self.equal_rates:
            raise ValueError("changing K requires equal rates")
        return replace(self, K=K, R=float(self.R[0]))

    def with_lam(self, lam: float) -> "GameConfig":
        return replace(self, R=self.R.copy(), lam=lam)


def default_power_cap(sigma2: float, a, eta_min: float) -> float:
    """Default cap ``10 sigma2 a / eta_min`` (largest ``a`` if rates differ)."""
    return 10.0 * sigma2 * float(np.max(a)) / eta_min


# ---------------------------------------------------------------------------
# efficiency function

def efficiency(gamma, a):
    """``f(gamma) = exp(-a / gamma)``, extended by continuity with ``f(0) = 0``."""
    gamma = np.asarray(gamma, dtype=float)
    a = np.asarray(a, dtype=float)
    if np.any(gamma < 0):
        raise ValueError("SINR must be >= 0")
    if np.any(a <= 0):
        raise ValueError("efficiency exponent a must be > 0")
    with np.errstate(divide="ignore", over="ignore"):  # tiny SINR: exp(-inf) = 0
        out = np.where(gamma > 0, np.exp(-a / np.where(gamma > 0, gamma, 1.0)), 0.0)
    return out[()] if out.ndim == 0 else out


def efficiency_derivative(gamma, a):
    """``f'(gamma) = a / gamma**2 * exp(-a / gamma)``; zero at ``gamma = 0``."""
    gamma = np.asarray(gamma, dtype=float)
    safe = np.where(gamma > 0, gamma, 1.0)
    out = np.where(gamma > 0, a / safe**2 * np.exp(-a / safe), 0.0)
    return out[()] if out.ndim == 0 else out


def gamma_tilde_residual(x, k: int, a: float):
    """Left side of ``x (1 - (k-1) x) f'(x) - f(x) = 0``."""
    return x * (1 - (k - 1) * x) * efficiency_derivative(x, a) - efficiency(x, a)


@lru_cache(maxsize=None)
def solve_gamma_tilde(k: int, a: float, tol: float = 1e-12, max_iter: int = 200) -> float:
    """Nonzero root of the operating-point condition for ``k`` active players.

    Bisection runs on the residual divided by ``f(x) > 0``, i.e. on
    ``(1 - (k-1) x) a / x - 1``: same sign, but it does not underflow near
    ``x = 0`` the way ``exp(-a / x)`` does.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not a > 0:
        raise ValueError("a must be > 0")

    def scaled(x):
        return (1 - (k - 1) * x) * a / x - 1.0

    lo = 1e-9
    if k > 1:
        hi = (1 - 1e-9) / (k - 1)
    else:
        hi = 1.0
        for _ in range(max_iter):
            if scaled(hi) < 0:
                break
            hi *= 2.0
    if not scaled(lo) > 0 > scaled(hi):
        raise SolverError(f"no sign change on [{lo}, {hi}] for k={k}, a={a}")
    try:
        return optimize.bisect(scaled, lo, hi, xtol=tol, maxiter=max_iter)
    except RuntimeError as exc:
        raise SolverError(str(exc)) from exc


def _op_factor(k: int, a: float) -> float:
    g = solve_gamma_tilde(int(k), float(a))
    return g / (1 - (k - 1) * g)


# ---------------------------------------------------------------------------
# stage outcome

@dataclass(frozen=True)
class StageOutcome:
    sinr: np.ndarray
    utility: np.ndarray


def _check_shapes(p, eta, K):
    if p.shape[-1] != K or eta.shape[-1] != K:
        raise ValueError(
            f"profile/state dimension mismatch: got {p.shape[-1]} and {eta.shape[-1]}, K={K}"
        )


def stage_outcome(p, eta, cfg: GameConfig) -> StageOutcome:
    """Per-player SINR and utility; silent players get utility 0."""
    p = np.asarray(p, dtype=float)
    eta = np.asarray(eta, dtype=float)
    _check_shapes(p, eta, cfg.K)
    received = p * eta
    # sum over the other players, computed directly rather than total - own
    others = received @ (1.0 - np.eye(cfg.K))
    sinr = received / (others + cfg.sigma2)
    f = efficiency(sinr, cfg.a)
    with np.errstate(divide="ignore", invalid="ignore"):
        utility = np.where(p > 0, cfg.R * f / np.where(p > 0, p, 1.0), 0.0)
    return StageOutcome(sinr=sinr, utility=utility)


# ---------------------------------------------------------------------------
# operating point

def operating_point_rows(etas, active, cfg: GameConfig):
    """Operating-point powers for stacked states and boolean activity masks.

    Each row uses ``k`` = its own number of active players.
    """
    etas = np.asarray(etas, dtype=float)
    active = np.asarray(active, dtype=bool)
    k = active.sum(axis=-1)
    if np.any(active & (etas <= 0)):
        raise ValueError("active player with zero channel gain")
    factor = np.zeros(etas.shape)
    for kk in np.unique(k):
        if kk == 0:
            continue
        rows = k == kk
        factor[rows] = [_op_factor(kk, ai) for ai in cfg.a]
    safe = np.where(active, etas, 1.0)
    p = np.where(active, cfg.sigma2 * factor / safe, 0.0)
    return np.minimum(p, cfg.p_max)


def operating_point_powers(eta, active, cfg: GameConfig) -> np.ndarray:
    """Powers equalizing every active player's SINR at the k-player root.

    ``active`` is a boolean mask or an iterable of player indices.
    """
    eta = np.asarray(eta, dtype=float)
    mask = np.asarray(active)
    if mask.dtype != bool:
        idx = np.asarray(list(active), dtype=int)
        mask = np.zeros(cfg.K, dtype=bool)
        mask[idx] = True
    return operating_point_rows(eta, mask, cfg)


# ---------------------------------------------------------------------------
# one-shot Nash equilibrium

@dataclass(frozen=True)
class NashEquilibrium:
    powers: np.ndarray
    beta: np.ndarray
    saturated: bool


def nash_powers(etas, cfg: GameConfig):
    """One-shot NE powers for stacked states; returns ``(powers, saturated)``.

    Every player targets SINR ``beta_i = a_i`` (the root of
    ``beta f'(beta) = f(beta)``). Writing ``b_i = a_i / (1 + a_i)``, the
    received powers are ``b_i sigma2 / (1 - sum b)``, which exist only when
    ``sum b < 1`` (``(K-1) a < 1`` for equal rates). Otherwise every player
    sits at ``p_max``.
    """
    etas = np.asarray(etas, dtype=float)
    if np.any(etas <= 0):
        raise ValueError("one-shot NE needs positive channel gains")
    b = cfg.a / (1 + cfg.a)
    B = b.sum()
    if B >= 1:
        return np.full(etas.shape, cfg.p_max), np.ones(etas.shape[:-1], dtype=bool)
    p = b * cfg.sigma2 / (1 - B) / etas
    saturated = np.any(p > cfg.p_max, axis=-1)
    return np.minimum(p, cfg.p_max), saturated


def one_shot_nash(eta, cfg: GameConfig) -> NashEquilibrium:
    p, saturated = nash_powers(eta, cfg)
    if saturated:
        beta = stage_outcome(p, eta, cfg).sinr
    else:
        beta = cfg.a.copy()
    return NashEquilibrium(powers=p, beta=beta, saturated=bool(saturated))


def best_response(i: int, interference: float, eta_i: float, cfg: GameConfig) -> float:
    """Utility-maximizing power against a fixed received interference (Watts).

    The unconstrained optimum targets SINR ``a_i``; utility is unimodal in
    power, so capping at ``p_max`` is the constrained optimum.
    """
    if not eta_i > 0:
        raise ValueError("best response needs a positive channel gain")
    if interference < 0:
        raise ValueError("interference must be >= 0")
    return min(cfg.a[i] * (interference + cfg.sigma2) / eta_i, cfg.p_max)
