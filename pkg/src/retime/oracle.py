"""Brute-force dynamic-programming reference over a squared-velocity grid.

Validates controllable sets and near-optimality of the solver on small
canonical instances.  Transition feasibility is checked directly against
the stage rows (no linear programming anywhere in this module, so the
code path is independent of the solvers it cross-checks).  Complexity is
O(N * G^2); intended for small grids only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .discretize import DiscretizedProblem
from .reach import Interval

__all__ = ["DPConfig", "dp_controllable", "dp_optimal_cost"]

_ROW_TOL = 1e-9


@dataclass(frozen=True)
class DPConfig:
    state_grid_size: int
    x_max: float

    def __post_init__(self):
        if self.state_grid_size < 2:
            raise ValueError("state grid needs at least 2 points")
        if self.x_max <= 0:
            raise ValueError("x_max must be positive")

    @property
    def cell(self) -> float:
        return self.x_max / (self.state_grid_size - 1)

    def grid(self) -> np.ndarray:
        return np.linspace(0.0, self.x_max, self.state_grid_size)


def _require_canonical(problem: DiscretizedProblem):
    if problem.has_slack:
        raise ValueError("the DP oracle supports slack-free stages only")


def _control_intervals(
    problem: DiscretizedProblem, i: int, states: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per grid state: [u_lo, u_hi] admissible at stage i, and feasibility."""
    st = problem.stages[i]
    al, be, ga = st.alpha, st.beta, st.gamma
    vals = be[:, None] * states[None, :] + ga[:, None]  # (R, G)
    feasible = np.ones(states.size, dtype=bool)
    zero = al == 0.0
    if np.any(zero):
        feasible &= np.all(vals[zero] <= _ROW_TOL, axis=0)
    u_hi = np.full(states.size, np.inf)
    u_lo = np.full(states.size, -np.inf)
    pos = al > 0.0
    if np.any(pos):
        u_hi = np.min(-vals[pos] / al[pos, None], axis=0)
    neg = al < 0.0
    if np.any(neg):
        u_lo = np.max(-vals[neg] / al[neg, None], axis=0)
    feasible &= u_lo <= u_hi + _ROW_TOL
    return u_lo, u_hi, feasible


def _step_predicate(problem: DiscretizedProblem, i: int, hull_lo: float, hull_hi: float):
    """Indicator of the stage-i one-step membership at a continuous state."""
    st = problem.stages[i]
    al, be, ga = st.alpha, st.beta, st.gamma
    delta = float(problem.grid.steps[i])
    pos = al > 0.0
    neg = al < 0.0
    zero = al == 0.0

    def member(x: float) -> bool:
        vals = be * x + ga
        if np.any(vals[zero] > _ROW_TOL):
            return False
        u_hi = np.min(-vals[pos] / al[pos]) if np.any(pos) else np.inf
        u_lo = np.max(-vals[neg] / al[neg]) if np.any(neg) else -np.inf
        if u_lo > u_hi + _ROW_TOL:
            return False
        u_lo = max(u_lo, (hull_lo - x) / (2.0 * delta))
        u_hi = min(u_hi, (hull_hi - x) / (2.0 * delta))
        return u_lo <= u_hi + _ROW_TOL

    return member


def _bisect_edge(member, inside: float, outside: float, iterations: int = 60) -> float:
    """Boundary of a one-sided membership interval between two states."""
    for _ in range(iterations):
        mid = 0.5 * (inside + outside)
        if member(mid):
            inside = mid
        else:
            outside = mid
    return inside


def dp_controllable(
    problem: DiscretizedProblem, target: Interval, config: DPConfig
) -> List[np.ndarray]:
    """Boolean masks over the state grid: which states can reach the target.

    Each stage marks the grid states whose exact transition range
    [x + 2 Delta u_lo(x), x + 2 Delta u_hi(x)] meets the continuation
    hull of the next stage.  The hull itself is carried at float
    precision (its edges bisected between grid points), so the marked
    extent quantizes the true set to within one grid cell at every stage
    instead of accumulating per step.  The target seeds the last stage
    to within one cell.
    """
    _require_canonical(problem)
    states = config.grid()
    cell = config.cell
    N = problem.N
    masks: List[np.ndarray] = [np.zeros(states.size, dtype=bool) for _ in range(N + 1)]

    _, _, feasible_last = _control_intervals(problem, N, states)
    if target.is_empty:
        return masks
    inside = (states >= target.lower - cell) & (states <= target.upper + cell)
    masks[N] = inside & feasible_last
    if not np.any(masks[N]):
        return masks
    hull_lo = max(float(target.lower), 0.0)
    hull_hi = min(float(target.upper), float(states[-1]))

    for i in range(N - 1, -1, -1):
        member = _step_predicate(problem, i, hull_lo, hull_hi)
        marked = np.array([member(float(x)) for x in states], dtype=bool)
        masks[i] = marked
        idx = np.where(marked)[0]
        if idx.size == 0:
            break
        lo_idx, hi_idx = int(idx[0]), int(idx[-1])
        hull_lo = float(states[lo_idx])
        if lo_idx > 0:
            hull_lo = _bisect_edge(member, hull_lo, float(states[lo_idx - 1]))
        hull_hi = float(states[hi_idx])
        if hi_idx < states.size - 1:
            hull_hi = _bisect_edge(member, hull_hi, float(states[hi_idx + 1]))
    return masks


def dp_optimal_cost(
    problem: DiscretizedProblem, x0: float, xN: float, config: DPConfig
) -> float:
    """Shortest traversal time over the layered state-grid graph.

    Edge weight between grid states x_k -> x_l at stage i is
    2 Delta_i / (sqrt(x_k) + sqrt(x_l)); infinity when unreachable.
    """
    _require_canonical(problem)
    states = config.grid()
    roots = np.sqrt(states)
    cell = config.cell
    N = problem.N

    _, _, feasible_last = _control_intervals(problem, N, states)
    cost = np.full(states.size, np.inf)
    end_ok = (np.abs(states - xN) <= cell) & feasible_last
    cost[end_ok] = 0.0

    for i in range(N - 1, -1, -1):
        delta = float(problem.grid.steps[i])
        u_lo, u_hi, feasible = _control_intervals(problem, i, states)
        t_lo = states + 2.0 * delta * u_lo
        t_hi = states + 2.0 * delta * u_hi
        lo_idx = np.clip(np.ceil((t_lo - cell) / cell - 1e-12).astype(int), 0, states.size)
        hi_idx = np.clip(np.floor((t_hi + cell) / cell + 1e-12).astype(int), -1, states.size - 1)
        new_cost = np.full(states.size, np.inf)
        for k in np.where(feasible)[0]:
            lo, hi = lo_idx[k], hi_idx[k]
            if hi < lo:
                continue
            denom = roots[k] + roots[lo : hi + 1]
            with np.errstate(divide="ignore"):
                weights = np.where(denom > 0.0, 2.0 * delta / denom, np.inf)
            total = weights + cost[lo : hi + 1]
            best = float(np.min(total)) if total.size else np.inf
            new_cost[k] = best
        cost = new_cost
        if not np.any(np.isfinite(cost)):
            return float("inf")

    start_ok = np.abs(states - x0) <= cell
    if not np.any(start_ok):
        return float("inf")
    return float(np.min(cost[start_ok]))
