"""Achievable utility region of small games by Markov-strategy enumeration.

Each player's stationary Markov strategy assigns a power level (from a
finite grid) to every joint channel state. Enumerating all such profiles
gives a cloud of long-run utility vectors; public randomization makes its
convex hull achievable, and the minmax levels cut it down to the
individually rational part.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, QhullError
from shapely.geometry import Polygon, box
from shapely.geometry.polygon import orient

from .channel import FiniteMarkovProcess, joint_state_distribution
from .equilibrium import BudgetExceeded, minmax_level
from .game import GameConfig, nash_powers, operating_point_rows, stage_outcome

__all__ = [
    "Hull",
    "MarkovStrategyProfile",
    "Region",
    "convex_hull_2d",
    "decode_profile",
    "enumerate_region",
    "evaluate_markov_profile",
    "mandatory_levels",
    "pareto_frontier",
    "power_levels",
]


@dataclass
class MarkovStrategyProfile:
    levels: np.ndarray   # (G,) power grid
    indices: np.ndarray  # (K, S) level index per player and joint state

    def powers(self) -> np.ndarray:
        """Profile per joint state, shape ``(S, K)``."""
        return np.asarray(self.levels)[np.asarray(self.indices).T]


def evaluate_markov_profile(profile: MarkovStrategyProfile, process: FiniteMarkovProcess,
                            cfg: GameConfig, mode: str = "average", lam: float | None = None,
                            initial=None) -> np.ndarray:
    """Long-run utility of a stationary Markov profile.

    ``average`` weights stage utilities by the joint stationary law.
    ``discounted`` solves ``v = lam u + (1 - lam) P v`` over joint states and
    returns ``v`` at ``initial`` (a joint gain vector or joint-state index).
    """
    states = process.joint_states()
    u = stage_outcome(profile.powers(), states, cfg).utility
    if mode == "average":
        _, probs = joint_state_distribution(process)
        return probs @ u
    if mode != "discounted":
        raise ValueError(f"unknown mode {mode!r}")
    lam = cfg.lam if lam is None else lam
    P = process.joint_transition()
    A = np.eye(len(states)) - (1 - lam) * P
    v = np.linalg.solve(A, lam * u)
    residual = np.abs(A @ v - lam * u).max()
    if residual >= 1e-10:
        raise ArithmeticError(f"discounted solve residual {residual:.3e}")
    if initial is None:
        raise ValueError("discounted mode needs an initial state")
    s = initial if np.ndim(initial) == 0 else process.joint_index(initial)
    return v[int(s)]


def mandatory_levels(process: FiniteMarkovProcess, cfg: GameConfig) -> np.ndarray:
    """Zero, the NE powers and the operating-point powers (every k) at every state."""
    states = process.joint_states()
    found = [np.zeros(1), nash_powers(states, cfg)[0].ravel()]
    for k in range(1, cfg.K + 1):
        mask = np.zeros(states.shape, dtype=bool)
        mask[:, :k] = True
        for shift in range(cfg.K):
            found.append(operating_point_rows(states, np.roll(mask, shift, axis=1), cfg).ravel())
    vals = np.unique(np.concatenate(found))
    # operating-point powers for different k agree only to the root tolerance
    keep = np.concatenate([[True], np.diff(vals) > 1e-9 * np.maximum(vals[1:], 1.0)])
    return vals[keep]


def power_levels(process: FiniteMarkovProcess, cfg: GameConfig, G: int) -> np.ndarray:
    """Grid of ``G`` levels: mandatory ones, then geometric steps up to ``p_max``."""
    base = mandatory_levels(process, cfg)
    if len(base) > G:
        raise ValueError(f"grid size {G} is below the {len(base)} mandatory levels")
    extra = G - len(base)
    if extra == 0:
        return base
    top = base[-1] if base[-1] > 0 else cfg.p_max / 2 ** extra
    fill = np.geomspace(top, cfg.p_max, extra + 1)[1:]
    return np.unique(np.concatenate([base, fill]))


def decode_profile(index: int, G: int, S: int, K: int) -> np.ndarray:
    """Inverse of the cloud row index: level indices of shape ``(K, S)``."""
    per_player = np.unravel_index(int(index), (G ** S,) * K)
    return np.array([np.unravel_index(m, (G,) * S) for m in per_player], dtype=np.intp).reshape(K, S)


# ---------------------------------------------------------------------------
# geometry

@dataclass
class Hull:
    """Convex polygon with counterclockwise vertices (no repeated first vertex)."""

    vertices: np.ndarray

    def contains(self, point, tol: float = 1e-9) -> bool:
        v = self.vertices
        x = np.asarray(point, dtype=float)
        if len(v) == 1:
            return bool(np.allclose(v[0], x, atol=tol))
        if len(v) == 2:
            d = v[1] - v[0]
            t = np.clip(np.dot(x - v[0], d) / np.dot(d, d), 0, 1)
            return bool(np.linalg.norm(v[0] + t * d - x) <= tol * max(1.0, np.abs(v).max()))
        edges = np.roll(v, -1, axis=0) - v
        normals = np.column_stack([edges[:, 1], -edges[:, 0]])
        norm = np.linalg.norm(normals, axis=1)
        dist = np.einsum("ij,ij->i", normals, x - v) / norm
        return bool(np.all(dist <= tol * max(1.0, np.abs(v).max())))

    def support(self, directions) -> np.ndarray:
        return (np.asarray(directions) @ self.vertices.T).max(axis=1)


def _drop_collinear(v: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    changed = True
    while changed and len(v) > 3:
        changed = False
        for k in range(len(v)):
            e1 = v[k] - v[k - 1]
            e2 = v[(k + 1) % len(v)] - v[k]
            cross = e1[0] * e2[1] - e1[1] * e2[0]
            if abs(cross) <= tol * np.linalg.norm(e1) * np.linalg.norm(e2):
                v = np.delete(v, k, axis=0)
                changed = True
                break
    return v


def convex_hull_2d(points) -> Hull:
    """Hull of a 2-D point cloud; starts at the lowest-then-leftmost vertex."""
    pts = np.unique(np.asarray(points, dtype=float), axis=0)
    if len(pts) <= 2:
        return Hull(pts)
    try:
        hull = ConvexHull(pts)
    except QhullError:
        # all points on one line: keep its two extremes
        d = pts[-1] - pts[0]
        t = (pts - pts[0]) @ d
        return Hull(pts[[np.argmin(t), np.argmax(t)]])
    v = _drop_collinear(pts[hull.vertices])
    start = np.lexsort((v[:, 0], v[:, 1]))[0]
    return Hull(np.roll(v, -start, axis=0))


def clip_hull(hull: Hull, lower) -> Hull:
    """Part of the hull with every coordinate at least ``lower``."""
    v = hull.vertices
    if len(v) < 3:
        keep = np.all(v >= np.asarray(lower) - 1e-12, axis=1)
        return Hull(v[keep])
    hi = v.max(axis=0) + 1.0
    clipped = Polygon(v).intersection(box(lower[0], lower[1], hi[0], hi[1]))
    if clipped.is_empty or clipped.geom_type != "Polygon":
        return Hull(np.empty((0, 2)))
    coords = np.asarray(orient(clipped, sign=1.0).exterior.coords)[:-1]
    v = _drop_collinear(coords)
    start = np.lexsort((v[:, 0], v[:, 1]))[0]
    return Hull(np.roll(v, -start, axis=0))


def pareto_frontier(points) -> np.ndarray:
    """Unique maximal points under componentwise order; 2-D sweep in O(n log n)."""
    pts = np.unique(np.atleast_2d(np.asarray(points, dtype=float)), axis=0)
    if pts.shape[1] == 2:
        order = np.lexsort((-pts[:, 1], -pts[:, 0]))
        pts = pts[order]
        best = np.maximum.accumulate(pts[:, 1])
        prev = np.concatenate([[-np.inf], best[:-1]])
        front = pts[pts[:, 1] > prev]
        return front[np.argsort(front[:, 0])]
    keep = []
    for k, p in enumerate(pts):
        dominated = np.all(pts >= p, axis=1) & np.any(pts > p, axis=1)
        if not dominated.any():
            keep.append(k)
    return pts[keep]


# ---------------------------------------------------------------------------
# enumeration

@dataclass
class Region:
    points: np.ndarray        # (N, K) average utilities, row n = profile n
    levels: np.ndarray
    n_states: int
    hull: Hull | None
    minmax: np.ndarray
    ir_hull: Hull | None

    def profile(self, index: int) -> MarkovStrategyProfile:
        K = self.points.shape[1]
        return MarkovStrategyProfile(self.levels, decode_profile(index, len(self.levels), self.n_states, K))

    def frontier(self) -> np.ndarray:
        return pareto_frontier(self.points)


def enumerate_region(process: FiniteMarkovProcess, cfg: GameConfig, G: int = 6, levels=None,
                     budget: int = 10_000_000, minmax_grid: int = 101) -> Region:
    """Average utilities of every pure stationary Markov profile on a power grid.

    Row ``n`` of ``points`` is the profile whose per-player strategy indices
    are ``np.unravel_index(n, (G**S,)*K)``, each strategy index in turn
    spelling one level index per joint state (first state most significant).
    """
    levels = power_levels(process, cfg, G) if levels is None else np.asarray(levels, dtype=float)
    G = len(levels)
    states, probs = joint_state_distribution(process)
    S, K = states.shape
    n_profiles = G ** (S * K)
    if n_profiles > budget:
        raise BudgetExceeded(
            f"{n_profiles} profiles exceed the budget of {budget}; reduce the grid size G"
        )
    # stage utility of every state and level tuple: (S, G, ..., G, K)
    grids = np.stack(np.meshgrid(*([levels] * K), indexing="ij"), axis=-1).reshape(-1, K)
    table = stage_outcome(grids[None, :, :], states[:, None, :], cfg).utility
    table = table.reshape((S,) + (G,) * K + (K,))
    M = G ** S
    digits = np.array(np.unravel_index(np.arange(M), (G,) * S)).T  # (M, S)
    values = np.zeros((M,) * K + (K,))
    for s in range(S):
        idx = tuple(digits[:, s].reshape([-1 if ax == j else 1 for ax in range(K)]) for j in range(K))
        values += probs[s] * table[s][idx]
    points = values.reshape(-1, K)
    mm = np.array([minmax_level(i, process, cfg, grid=minmax_grid).closed_form for i in range(K)])
    hull = ir = None
    if K == 2:
        hull = convex_hull_2d(points)
        ir = clip_hull(hull, mm)
    return Region(points, levels, S, hull, mm, ir)
