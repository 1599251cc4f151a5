"""Admissible, reach, one-step, reachable and controllable sets.

Every set of squared path velocities handled here is a closed interval
(possibly empty), so each computation reduces to a pair of small LPs.
The recursions are sequential in the stage index; all functions are pure.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .discretize import DiscretizedProblem, StageData
from .lp import (
    INFEASIBLE,
    OPTIMAL,
    UNBOUNDED,
    LPError,
    LPOutcome,
    StageLP,
    solve_2d,
    solve_simplex,
)

__all__ = [
    "Interval",
    "EMPTY_INTERVAL",
    "LPCounter",
    "UncertaintyVertexSet",
    "admissible_states",
    "reach_set",
    "one_step_set",
    "controllable_sets",
    "reachable_sets",
    "robust_one_step_set",
    "robust_controllable_sets",
    "build_stage_lp",
]

EMPTY_BAND = 1e-9
MEMBERSHIP_TOL = 1e-9


@dataclass(frozen=True)
class Interval:
    """Closed interval of squared velocities; empty when upper < lower."""

    lower: float
    upper: float

    @property
    def is_empty(self) -> bool:
        return self.upper < self.lower

    def contains(self, value: float, tol: float = MEMBERSHIP_TOL) -> bool:
        if self.is_empty:
            return False
        return self.lower - tol <= value <= self.upper + tol

    def intersect(self, other: "Interval") -> "Interval":
        if self.is_empty or other.is_empty:
            return EMPTY_INTERVAL
        return make_interval(max(self.lower, other.lower), min(self.upper, other.upper))

    @property
    def width(self) -> float:
        return 0.0 if self.is_empty else self.upper - self.lower

    @classmethod
    def point(cls, value: float) -> "Interval":
        return make_interval(value, value)


EMPTY_INTERVAL = Interval(np.inf, -np.inf)


def make_interval(lower: float, upper: float) -> Interval:
    """Normalize LP extrema into an Interval.

    An inverted pair deeper than the tolerance band is empty; within the
    band it collapses to the midpoint.  A lower bound within tolerance
    below zero clamps to zero.
    """
    if upper < lower - EMPTY_BAND:
        return EMPTY_INTERVAL
    if upper < lower:
        lower = upper = 0.5 * (lower + upper)
    if lower < 0.0:
        if lower < -EMPTY_BAND:
            raise LPError("interval lower bound %r below zero beyond tolerance" % lower)
        lower = 0.0
        upper = max(upper, 0.0)
    # + 0.0 normalizes negative zero from minimization LPs.
    return Interval(lower + 0.0, upper + 0.0)


class LPCounter:
    """Counts LP solves across a computation."""

    __slots__ = ("total",)

    def __init__(self):
        self.total = 0

    def add(self, k: int = 1) -> None:
        self.total += k


class UncertaintyVertexSet:
    """Per-stage finite lists of constraint realizations.

    Each realization is a full stage row set (with optional slack blocks);
    a robust control-state pair must satisfy every realization.
    """

    def __init__(self, stage_realizations: Sequence[Sequence[StageData]]):
        stages: List[Tuple[StageData, ...]] = []
        for i, reals in enumerate(stage_realizations):
            reals = tuple(reals)
            if not reals:
                raise ValueError("stage %d has no realizations" % i)
            stages.append(reals)
        self.stages = tuple(stages)

    @classmethod
    def from_problems(cls, problems: Sequence[DiscretizedProblem]) -> "UncertaintyVertexSet":
        if not problems:
            raise ValueError("need at least one problem")
        n_stage = len(problems[0].stages)
        for p in problems[1:]:
            if len(p.stages) != n_stage:
                raise ValueError("problems must share the same grid")
        return cls(
            [tuple(p.stages[i] for p in problems) for i in range(n_stage)]
        )

    def realizations(self, i: int) -> Tuple[StageData, ...]:
        return self.stages[i]


def _merge_stages(stages: Sequence[StageData], x_cap: float) -> StageData:
    """Stack realizations' rows and blocks, re-appending the implicit rows."""
    alphas = [st.alpha for st in stages]
    betas = [st.beta for st in stages]
    gammas = [st.gamma for st in stages]
    alphas.append(np.array([0.0, 0.0]))
    betas.append(np.array([-1.0, 1.0]))
    gammas.append(np.array([0.0, -x_cap]))
    blocks: Tuple = ()
    for st in stages:
        blocks = blocks + st.blocks
    return StageData(
        alpha=np.concatenate(alphas),
        beta=np.concatenate(betas),
        gamma=np.concatenate(gammas),
        blocks=blocks,
    )


def build_stage_lp(
    stage: StageData,
    objective_ux: Tuple[float, float],
    extra_rows: Sequence[Tuple[float, float, float]] = (),
) -> StageLP:
    """Assemble the dense LP over (u, x, w...) for a slack-carrying stage."""
    slack_dims = [blk.slack_dim for blk in stage.blocks]
    k_total = int(sum(slack_dims))
    nvar = 2 + k_total
    rows: List[np.ndarray] = []
    consts: List[float] = []

    def add_row(cu: float, cx: float, w_cols: Optional[np.ndarray], const: float):
        row = np.zeros(nvar)
        row[0] = cu
        row[1] = cx
        if w_cols is not None:
            row[2:] = w_cols
        rows.append(row)
        consts.append(const)

    for al, be, ga in zip(stage.alpha, stage.beta, stage.gamma):
        add_row(float(al), float(be), None, float(ga))
    for al, be, ga in extra_rows:
        add_row(float(al), float(be), None, float(ga))

    offset = 0
    for blk, dim in zip(stage.blocks, slack_dims):
        H = blk.H if blk.H is not None else np.eye(dim)
        # Polytope rows F w <= g.
        for frow, gval in zip(blk.F, blk.g):
            w = np.zeros(k_total)
            w[offset : offset + dim] = frow
            add_row(0.0, 0.0, w, -float(gval))
        # Coupling equalities a u + b x + c = H w as inequality pairs.
        for aj, bj, cj, hrow in zip(blk.a, blk.b, blk.c, H):
            w = np.zeros(k_total)
            w[offset : offset + dim] = -hrow
            add_row(float(aj), float(bj), w, float(cj))
            add_row(-float(aj), -float(bj), -w, -float(cj))
        offset += dim

    objective = np.zeros(nvar)
    objective[0] = objective_ux[0]
    objective[1] = objective_ux[1]
    return StageLP(objective=objective, rows=np.vstack(rows), consts=np.array(consts))


def _extrema(
    stage: StageData,
    rows_cache: Optional[List[Tuple[float, float, float]]],
    objective: Tuple[float, float],
    extra_rows: Sequence[Tuple[float, float, float]],
    counter: Optional[LPCounter],
) -> Interval:
    """Max and min of objective.(u, x) over one stage's admissible pairs."""
    if counter is not None:
        counter.add(2)
    if not stage.has_slack:
        rows = (rows_cache if rows_cache is not None else stage.rows_list()) + list(
            extra_rows
        )
        hi = solve_2d(objective, rows)
        lo = solve_2d((-objective[0], -objective[1]), rows)
    else:
        hi = solve_simplex(build_stage_lp(stage, objective, extra_rows))
        lo = solve_simplex(
            build_stage_lp(stage, (-objective[0], -objective[1]), extra_rows)
        )
    for outcome in (hi, lo):
        if outcome.status == UNBOUNDED:
            raise LPError("stage LP unbounded; squared-velocity cap missing")
    if hi.status == INFEASIBLE or lo.status == INFEASIBLE:
        return EMPTY_INTERVAL
    return make_interval(-lo.value, hi.value)


def admissible_states(
    problem: DiscretizedProblem, i: int, counter: Optional[LPCounter] = None
) -> Interval:
    """X_i: the projection of the stage-i admissible pairs onto x."""
    stage = problem.stages[i]
    return _extrema(stage, problem.stage_rows(i), (0.0, 1.0), (), counter)


def _interval_rows(
    delta: float, interval: Interval, on_image: bool
) -> List[Tuple[float, float, float]]:
    """Rows confining either x (on_image=False) or x + 2*delta*u to interval."""
    cu = 2.0 * delta if on_image else 0.0
    return [
        (cu, 1.0, -interval.upper),
        (-cu, -1.0, interval.lower),
    ]


def reach_set(
    problem: DiscretizedProblem,
    i: int,
    interval: Interval,
    counter: Optional[LPCounter] = None,
    admissible_next: Optional[Interval] = None,
) -> Interval:
    """States reachable at stage i+1 from `interval` through stage-i pairs.

    Two LPs optimize x + 2*Delta_i*u subject to the stage rows, x in the
    seed interval and the image confined to X_{i+1} (computed here with one
    extra LP pair unless supplied).
    """
    if interval.is_empty:
        return EMPTY_INTERVAL
    delta = float(problem.grid.steps[i])
    if admissible_next is None:
        admissible_next = admissible_states(problem, i + 1, counter)
    if admissible_next.is_empty:
        return EMPTY_INTERVAL
    extra = _interval_rows(0.0, interval, on_image=False)
    extra += _interval_rows(delta, admissible_next, on_image=True)
    return _extrema(
        problem.stages[i], problem.stage_rows(i), (2.0 * delta, 1.0), extra, counter
    )


def one_step_set(
    problem: DiscretizedProblem,
    i: int,
    interval: Interval,
    counter: Optional[LPCounter] = None,
) -> Interval:
    """States at stage i from which `interval` is reachable in one step."""
    if interval.is_empty:
        return EMPTY_INTERVAL
    delta = float(problem.grid.steps[i])
    extra = _interval_rows(delta, interval, on_image=True)
    return _extrema(
        problem.stages[i], problem.stage_rows(i), (0.0, 1.0), extra, counter
    )


def controllable_sets(
    problem: DiscretizedProblem,
    target: Interval,
    counter: Optional[LPCounter] = None,
) -> List[Interval]:
    """K_i for i = 0..N given the desired ending set at stage N."""
    N = problem.N
    sets: List[Interval] = [EMPTY_INTERVAL] * (N + 1)
    sets[N] = target.intersect(admissible_states(problem, N, counter))
    for i in range(N - 1, -1, -1):
        sets[i] = one_step_set(problem, i, sets[i + 1], counter)
    return sets


def reachable_sets(
    problem: DiscretizedProblem,
    start: Interval,
    counter: Optional[LPCounter] = None,
) -> List[Interval]:
    """L_i for i = 0..N given the starting set at stage 0."""
    N = problem.N
    sets: List[Interval] = [EMPTY_INTERVAL] * (N + 1)
    sets[0] = start.intersect(admissible_states(problem, 0, counter))
    for i in range(N):
        sets[i + 1] = reach_set(problem, i, sets[i], counter)
    return sets


def robust_one_step_set(
    problem: DiscretizedProblem,
    i: int,
    interval: Interval,
    vertices: UncertaintyVertexSet,
    counter: Optional[LPCounter] = None,
) -> Interval:
    """One-step set with every vertex realization's rows stacked."""
    if interval.is_empty:
        return EMPTY_INTERVAL
    merged = _merge_stages(vertices.realizations(i), problem.x_cap)
    delta = float(problem.grid.steps[i])
    extra = _interval_rows(delta, interval, on_image=True)
    return _extrema(merged, None, (0.0, 1.0), extra, counter)


def robust_controllable_sets(
    problem: DiscretizedProblem,
    target: Interval,
    vertices: UncertaintyVertexSet,
    counter: Optional[LPCounter] = None,
) -> List[Interval]:
    """Controllable-set recursion under stacked vertex realizations."""
    N = problem.N
    merged_last = _merge_stages(vertices.realizations(N), problem.x_cap)
    sets: List[Interval] = [EMPTY_INTERVAL] * (N + 1)
    admissible_last = _extrema(merged_last, None, (0.0, 1.0), (), counter)
    sets[N] = target.intersect(admissible_last)
    for i in range(N - 1, -1, -1):
        sets[i] = robust_one_step_set(problem, i, sets[i + 1], vertices, counter)
    return sets
