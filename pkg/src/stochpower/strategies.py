"""Power-control mechanisms.

Every mechanism is a joint stage policy: at stage ``t`` it maps what it is
allowed to observe to a full power profile. The engine calls

    act(t, eta, prev_eta, last_played) -> powers

with ``t`` 0-based, ``eta`` the current gains, ``prev_eta`` the gains of the
previous stage (``None`` at ``t = 0``) and ``last_played`` the profile that
was actually played at ``t - 1`` (public monitoring). Open-loop policies
also expose ``batch(etas)`` to compute a whole trajectory at once; the two
paths produce identical numbers.
"""

from __future__ import annotations

import itertools

import numpy as np

from .game import GameConfig, best_response, nash_powers, operating_point_rows, stage_outcome

__all__ = [
    "CentralizedSMUPolicy",
    "Deviator",
    "GrimTrigger",
    "MarkovProfilePolicy",
    "MyopicNashPolicy",
    "NashPolicy",
    "OperatingPointPolicy",
    "Recommendation",
    "SMUPolicy",
    "exhaustive_select_rows",
    "grim_trigger_wrap",
    "make_mechanism",
    "smu_select",
    "smu_select_rows",
    "STAGE_RULES",
    "MECHANISMS",
]

TIE_RTOL = 1e-12


def _pick(sums: np.ndarray) -> np.ndarray:
    """Index of the first candidate within ``TIE_RTOL`` of the row maximum."""
    best = sums.max(axis=-1, keepdims=True)
    return np.argmax(sums >= best - TIE_RTOL * np.abs(best), axis=-1)


def _topk_masks(etas: np.ndarray) -> np.ndarray:
    """masks[n, k-1, :] marks the k best players of row n (stable order)."""
    K = etas.shape[-1]
    order = np.argsort(-etas, axis=-1, kind="stable")
    rank = np.empty_like(order)
    np.put_along_axis(rank, order, np.arange(K)[None, :], axis=-1)
    return rank[..., None, :] < np.arange(1, K + 1)[:, None]


def _candidate_sums(etas, masks, cfg):
    # etas (N, K), masks (N, C, K) -> (N, C) sum utilities at the operating point
    N, C, K = masks.shape
    e = np.broadcast_to(etas[:, None, :], masks.shape).reshape(-1, K)
    m = masks.reshape(-1, K)
    p = operating_point_rows(e, m, cfg)
    return stage_outcome(p, e, cfg).utility.sum(axis=-1).reshape(N, C)


def smu_select_rows(etas, cfg: GameConfig, exhaustive: bool = False) -> np.ndarray:
    """Receiver's selection for stacked states, as boolean masks ``(N, K)``.

    Equal rates: best gain-sorted prefix. Unequal rates (or ``exhaustive``):
    all ``2**K - 1`` non-empty subsets.
    """
    etas = np.atleast_2d(np.asarray(etas, dtype=float))
    if exhaustive or not cfg.equal_rates:
        return exhaustive_select_rows(etas, cfg)
    masks = _topk_masks(etas)
    choice = _pick(_candidate_sums(etas, masks, cfg))
    return masks[np.arange(len(etas)), choice]


def exhaustive_select_rows(etas, cfg: GameConfig) -> np.ndarray:
    """Brute-force best non-empty subset; ties go to the smaller, then lexicographically first, set."""
    etas = np.atleast_2d(np.asarray(etas, dtype=float))
    K = cfg.K
    subsets = [c for k in range(1, K + 1) for c in itertools.combinations(range(K), k)]
    cand = np.zeros((len(subsets), K), dtype=bool)
    for row, c in enumerate(subsets):
        cand[row, list(c)] = True
    masks = np.broadcast_to(cand, (len(etas),) + cand.shape)
    choice = _pick(_candidate_sums(etas, masks, cfg))
    return cand[choice]


class Recommendation:
    """Active set chosen by the receiver and the stage it applies to."""

    def __init__(self, active, stage: int):
        self.active = np.asarray(active, dtype=bool)
        self.stage = stage

    @property
    def players(self) -> tuple[int, ...]:
        return tuple(np.flatnonzero(self.active).tolist())

    def __repr__(self):
        return f"Recommendation(players={self.players}, stage={self.stage})"


def smu_select(eta, cfg: GameConfig, stage: int = 1, exhaustive: bool = False) -> Recommendation:
    """Set picked from the gains observed at ``stage - 1`` (applies at ``stage``)."""
    return Recommendation(smu_select_rows(eta, cfg, exhaustive)[0], stage)


# ---------------------------------------------------------------------------
# stage rules: joint state -> profile, no memory and no delay

def _smu_rule(etas, cfg, exhaustive=False):
    etas = np.atleast_2d(etas)
    return operating_point_rows(etas, smu_select_rows(etas, cfg, exhaustive), cfg)


def _op_rule(etas, cfg):
    etas = np.atleast_2d(etas)
    return operating_point_rows(etas, np.ones(etas.shape, dtype=bool), cfg)


def _nash_rule(etas, cfg):
    return nash_powers(np.atleast_2d(etas), cfg)[0]


STAGE_RULES = {"smu": _smu_rule, "op": _op_rule, "nash": _nash_rule}


# ---------------------------------------------------------------------------
# policies

class _OpenLoop:
    """Policies whose powers depend on the channel trajectory only."""

    adaptive = False

    def reset(self):
        pass

    def act(self, t, eta, prev_eta, last_played):
        if prev_eta is None:
            return self.batch(np.asarray(eta)[None, :])[0]
        return self.batch(np.vstack([prev_eta, eta]))[1]


class OperatingPointPolicy(_OpenLoop):
    """Everyone at the K-player operating point with its current gain."""

    name = "operating_point"

    def __init__(self, cfg: GameConfig):
        self.cfg = cfg

    def batch(self, etas):
        return _op_rule(etas, self.cfg)


class SMUPolicy(_OpenLoop):
    """Receiver recommends a set from last stage's gains; members set their own power.

    Stage 0 has nothing to recommend from, so everyone is active.
    """

    name = "smu"

    def __init__(self, cfg: GameConfig, exhaustive: bool = False):
        self.cfg = cfg
        self.exhaustive = exhaustive

    def batch(self, etas):
        etas = np.atleast_2d(etas)
        masks = np.ones(etas.shape, dtype=bool)
        if len(etas) > 1:
            masks[1:] = smu_select_rows(etas[:-1], self.cfg, self.exhaustive)
        return operating_point_rows(etas, masks, self.cfg)


class CentralizedSMUPolicy(_OpenLoop):
    """Receiver computes set and powers from last stage's gains; they are applied verbatim."""

    name = "centralized_smu"

    def __init__(self, cfg: GameConfig, exhaustive: bool = False):
        self.cfg = cfg
        self.exhaustive = exhaustive

    def batch(self, etas):
        etas = np.atleast_2d(etas)
        p = np.empty(etas.shape)
        p[0] = _op_rule(etas[:1], self.cfg)[0]
        if len(etas) > 1:
            p[1:] = _smu_rule(etas[:-1], self.cfg, self.exhaustive)
        return p


class NashPolicy(_OpenLoop):
    """One-shot NE of the current state."""

    name = "nash"

    def __init__(self, cfg: GameConfig):
        self.cfg = cfg

    def batch(self, etas):
        return _nash_rule(etas, self.cfg)


class MyopicNashPolicy(_OpenLoop):
    """Static NE computed once at the mean gains; ignores the channel."""

    name = "myopic_nash"

    def __init__(self, cfg: GameConfig, mean_gain):
        self.cfg = cfg
        self.powers = nash_powers(np.asarray(mean_gain, dtype=float), cfg)[0]

    def batch(self, etas):
        return np.broadcast_to(self.powers, np.shape(etas)).copy()


class MarkovProfilePolicy(_OpenLoop):
    """Stationary Markov profile: joint state index -> power level per player."""

    name = "markov_profile"

    def __init__(self, levels, indices, process):
        self.levels = np.asarray(levels, dtype=float)
        self.indices = np.asarray(indices, dtype=np.intp)  # (K, S)
        self.process = process

    def batch(self, etas):
        etas = np.atleast_2d(etas)
        idx = self.process.state_index(etas)
        flat = np.ravel_multi_index(tuple(idx.T), (self.process.n_states,) * etas.shape[1])
        return self.levels[self.indices[:, flat].T]


class GrimTrigger:
    """Follow ``base`` until a played profile differs from its prescription, then NE forever."""

    adaptive = True

    def __init__(self, base, cfg: GameConfig, rtol: float = 1e-9):
        self.base = base
        self.cfg = cfg
        self.rtol = rtol
        self.name = f"grim({base.name})"
        self.reset()

    def reset(self):
        self.base.reset()
        self.punishing = False
        self.triggered_at = None
        self._prescribed = None

    def act(self, t, eta, prev_eta, last_played):
        if not self.punishing and last_played is not None and self._prescribed is not None:
            scale = np.maximum(np.abs(self._prescribed), 1e-300)
            if np.any(np.abs(np.asarray(last_played) - self._prescribed) > self.rtol * scale):
                self.punishing = True
                self.triggered_at = t
        if self.punishing:
            self._prescribed = None
            return nash_powers(np.asarray(eta, dtype=float), self.cfg)[0]
        self._prescribed = np.asarray(self.base.act(t, eta, prev_eta, last_played), dtype=float)
        return self._prescribed.copy()


def grim_trigger_wrap(base, cfg: GameConfig) -> GrimTrigger:
    return GrimTrigger(base, cfg)


class Deviator:
    """Joint policy where ``player`` departs from ``inner`` at one stage.

    By default the deviation is a best response to the others' prescribed
    powers at that stage.
    """

    adaptive = True

    def __init__(self, inner, cfg: GameConfig, player: int, stage: int, power: float | None = None):
        self.inner = inner
        self.cfg = cfg
        self.player = player
        self.stage = stage
        self.power = power
        self.name = f"deviate({inner.name}, player={player}, stage={stage})"

    def reset(self):
        self.inner.reset()

    def act(self, t, eta, prev_eta, last_played):
        p = np.array(self.inner.act(t, eta, prev_eta, last_played), dtype=float)
        if t == self.stage:
            i = self.player
            if self.power is None:
                interference = float(np.delete(p * eta, i).sum())
                p[i] = best_response(i, interference, float(eta[i]), self.cfg)
            else:
                p[i] = self.power
        return p


MECHANISMS = ("centralized_smu", "smu", "operating_point", "myopic_nash")


def make_mechanism(name: str, cfg: GameConfig, process=None, exhaustive: bool = False):
    if name == "smu":
        return SMUPolicy(cfg, exhaustive)
    if name == "centralized_smu":
        return CentralizedSMUPolicy(cfg, exhaustive)
    if name == "operating_point":
        return OperatingPointPolicy(cfg)
    if name == "nash":
        return NashPolicy(cfg)
    if name == "myopic_nash":
        if process is None:
            raise ValueError("myopic_nash needs the channel process for its mean gain")
        return MyopicNashPolicy(cfg, process.mean_gain())
    raise ValueError(f"unknown mechanism {name!r}; choose from {MECHANISMS + ('nash',)}")
