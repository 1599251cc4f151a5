"""Small dense linear-program solvers for per-stage set computations.

Three solvers, matched to the LP shapes that arise per grid stage:

* ``solve_2d``: randomized-incremental method over (u, x) with inequality
  rows alpha*u + beta*x + gamma <= 0.  Expected O(rows) per call, which is
  what keeps whole-path solves linear in the number of constraint
  inequalities.
* ``solve_1d_u``: interval intersection for a single free variable, used
  by the greedy forward pass where x is already fixed.
* ``solve_simplex``: two-phase dense simplex with Bland's rule for stages
  carrying slack variables (torques, contact forces).

All solvers are pure given their inputs and the shuffle seed, so they are
safe to call concurrently on distinct problems.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

__all__ = [
    "OPTIMAL",
    "INFEASIBLE",
    "UNBOUNDED",
    "LPOutcome",
    "StageLP",
    "LPError",
    "solve_2d",
    "solve_1d_u",
    "solve_simplex",
    "DEFAULT_SHUFFLE_SEED",
]

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

FEASIBILITY_TOL = 1e-9
PIVOT_TOL = 1e-10
SIMPLEX_ITERATION_CAP = 10**6

# Virtual box bounding the randomized-incremental method; an optimum whose
# value reaches the escape threshold is reported as unbounded.
_BOX = 1e18
_UNBOUNDED_VALUE = 1e15

DEFAULT_SHUFFLE_SEED = 977

Row2 = Tuple[float, float, float]


class LPError(RuntimeError):
    """Internal solver failure (iteration cap, inconsistent state)."""


@dataclass(frozen=True)
class LPOutcome:
    status: str
    value: Optional[float] = None
    argument: Optional[np.ndarray] = None

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


@dataclass(frozen=True)
class StageLP:
    """Dense LP over (u, x, w...): maximize objective . y, rows y + consts <= 0."""

    objective: np.ndarray  # (nvar,)
    rows: np.ndarray  # (R, nvar)
    consts: np.ndarray  # (R,)

    def __post_init__(self):
        objective = np.atleast_1d(np.asarray(self.objective, dtype=float))
        rows = np.atleast_2d(np.asarray(self.rows, dtype=float))
        consts = np.atleast_1d(np.asarray(self.consts, dtype=float))
        if rows.shape != (consts.size, objective.size):
            raise ValueError(
                "rows shape %s inconsistent with %d variables / %d constants"
                % (rows.shape, objective.size, consts.size)
            )
        if not (
            np.all(np.isfinite(objective))
            and np.all(np.isfinite(rows))
            and np.all(np.isfinite(consts))
        ):
            raise ValueError("LP data must be finite")
        object.__setattr__(self, "objective", objective)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "consts", consts)

    @property
    def variable_count(self) -> int:
        return self.objective.size


def _feasible_at(point: Tuple[float, float], rows: List[Row2]) -> bool:
    u, x = point
    for al, be, ga in rows:
        resid = al * u + be * x + ga
        if resid > FEASIBILITY_TOL * max(1.0, abs(al * u), abs(be * x), abs(ga)):
            return False
    return True


def _line_optimum(
    al: float,
    be: float,
    ga: float,
    processed: List[Row2],
    c_u: float,
    c_x: float,
) -> Optional[Tuple[float, float]]:
    """Optimize c over the line al*u + be*x + ga = 0 subject to processed rows."""
    norm2 = al * al + be * be
    pu = -ga * al / norm2
    px = -ga * be / norm2
    du = -be
    dx = al
    t_lo = -_BOX
    t_hi = _BOX
    # Box limits in the line parameter.
    if du != 0.0:
        b1 = (_BOX - pu) / du
        b2 = (-_BOX - pu) / du
        if b1 < b2:
            b1, b2 = b2, b1
        t_hi = min(t_hi, b1)
        t_lo = max(t_lo, b2)
    if dx != 0.0:
        b1 = (_BOX - px) / dx
        b2 = (-_BOX - px) / dx
        if b1 < b2:
            b1, b2 = b2, b1
        t_hi = min(t_hi, b1)
        t_lo = max(t_lo, b2)
    for al2, be2, ga2 in processed:
        slope = al2 * du + be2 * dx
        offset = al2 * pu + be2 * px + ga2
        if slope == 0.0:
            # Exactly parallel: the row holds everywhere on the line or nowhere.
            if offset > FEASIBILITY_TOL * max(1.0, abs(al2 * pu), abs(be2 * px), abs(ga2)):
                return None
            continue
        bound = -offset / slope
        if slope > 0.0:
            if bound < t_hi:
                t_hi = bound
        else:
            if bound > t_lo:
                t_lo = bound
    if t_lo > t_hi:
        # Inverted by rounding: accept the midpoint only if it actually
        # satisfies every processed row.
        t_mid = 0.5 * (t_lo + t_hi)
        point = (pu + t_mid * du, px + t_mid * dx)
        if not _feasible_at(point, processed):
            return None
        t_lo = t_hi = t_mid
    obj_slope = c_u * du + c_x * dx
    if obj_slope > 0.0:
        t = t_hi
    elif obj_slope < 0.0:
        t = t_lo
    else:
        t = t_lo
    return pu + t * du, px + t * dx


def solve_2d(
    objective: Tuple[float, float],
    rows: Sequence[Row2],
    seed: int = DEFAULT_SHUFFLE_SEED,
) -> LPOutcome:
    """Maximize c_u*u + c_x*x subject to alpha*u + beta*x + gamma <= 0 rows.

    Randomized incremental method with a deterministic shuffle: identical
    inputs and seed give identical outcomes.
    """
    c_u, c_x = float(objective[0]), float(objective[1])
    clean: List[Row2] = []
    for al, be, ga in rows:
        # Coefficients negligible within their own row are rounding residue
        # (e.g. spline endpoint curvature); snap them so parallelism tests
        # stay exact.
        snap = 1e-13 * max(abs(al), abs(be))
        if abs(al) <= snap:
            al = 0.0
        if abs(be) <= snap:
            be = 0.0
        if al == 0.0 and be == 0.0:
            if ga > FEASIBILITY_TOL:
                return LPOutcome(INFEASIBLE)
            continue
        clean.append((al, be, ga))
    if not clean:
        # Only the virtual box binds.
        return LPOutcome(UNBOUNDED) if (c_u, c_x) != (0.0, 0.0) else LPOutcome(
            OPTIMAL, 0.0, np.array([0.0, 0.0])
        )

    order = list(range(len(clean)))
    random.Random(seed).shuffle(order)

    u = _BOX if c_u >= 0.0 else -_BOX
    x = _BOX if c_x >= 0.0 else -_BOX
    processed: List[Row2] = []
    for idx in order:
        al, be, ga = clean[idx]
        resid = al * u + be * x + ga
        tol = 1e-12 * max(1.0, abs(al * u), abs(be * x), abs(ga))
        if resid <= tol:
            processed.append((al, be, ga))
            continue
        opt = _line_optimum(al, be, ga, processed, c_u, c_x)
        if opt is None:
            return LPOutcome(INFEASIBLE)
        u, x = opt
        processed.append((al, be, ga))
    value = c_u * u + c_x * x
    if abs(value) >= _UNBOUNDED_VALUE:
        return LPOutcome(UNBOUNDED)
    return LPOutcome(OPTIMAL, value, np.array([u, x]))


def solve_1d_u(
    rows_at_fixed_x: Sequence[Tuple[float, float]],
    maximize: bool = True,
) -> LPOutcome:
    """Optimize u over half-lines alpha*u + gamma <= 0."""
    u_lo = -np.inf
    u_hi = np.inf
    for al, ga in rows_at_fixed_x:
        if al == 0.0:
            if ga > FEASIBILITY_TOL:
                return LPOutcome(INFEASIBLE)
            continue
        bound = -ga / al
        if al > 0.0:
            u_hi = min(u_hi, bound)
        else:
            u_lo = max(u_lo, bound)
    if u_lo > u_hi + FEASIBILITY_TOL:
        return LPOutcome(INFEASIBLE)
    if u_lo > u_hi:
        u_lo = u_hi = 0.5 * (u_lo + u_hi)
    u = u_hi if maximize else u_lo
    if not np.isfinite(u):
        return LPOutcome(UNBOUNDED)
    return LPOutcome(OPTIMAL, float(u), np.array([u]))


def _simplex_core(
    tableau: np.ndarray,
    basis: np.ndarray,
    cost_row: np.ndarray,
    n_total: int,
) -> Tuple[str, int]:
    """Run pivots on (tableau | rhs) with Bland's rule, minimizing cost_row."""
    iterations = 0
    m = tableau.shape[0]
    while True:
        iterations += 1
        if iterations > SIMPLEX_ITERATION_CAP:
            raise LPError("simplex iteration cap exceeded")
        entering = -1
        for j in range(n_total):
            if cost_row[j] < -PIVOT_TOL:
                entering = j
                break
        if entering < 0:
            return OPTIMAL, iterations
        leaving = -1
        best_ratio = np.inf
        for i in range(m):
            aij = tableau[i, entering]
            if aij > PIVOT_TOL:
                ratio = tableau[i, -1] / aij
                if ratio < best_ratio - 1e-12 or (
                    abs(ratio - best_ratio) <= 1e-12
                    and (leaving < 0 or basis[i] < basis[leaving])
                ):
                    best_ratio = ratio
                    leaving = i
        if leaving < 0:
            return UNBOUNDED, iterations
        piv = tableau[leaving, entering]
        tableau[leaving] /= piv
        col = tableau[:, entering].copy()
        col[leaving] = 0.0
        tableau -= np.outer(col, tableau[leaving])
        cost_row -= cost_row[entering] * tableau[leaving]
        basis[leaving] = entering


def solve_simplex(lp: StageLP) -> LPOutcome:
    """Two-phase dense simplex for the stage LP (free variables split)."""
    nvar = lp.variable_count
    R = lp.consts.size
    # Free variables split into positive parts: y = y_pos - y_neg.
    A = np.hstack([lp.rows, -lp.rows])
    b = -lp.consts.copy()
    c = np.concatenate([-lp.objective, lp.objective])  # minimize -objective
    n_split = 2 * nvar

    # Slack on every row; flip rows with negative rhs and add artificials.
    n_rows = R
    slack = np.eye(n_rows)
    flip = b < 0.0
    A = A.copy()
    A[flip] *= -1.0
    b = b.copy()
    b[flip] *= -1.0
    slack[flip] *= -1.0
    need_art = flip
    n_art = int(np.count_nonzero(need_art))
    art = np.zeros((n_rows, n_art))
    art_idx = np.where(need_art)[0]
    for k, i in enumerate(art_idx):
        art[i, k] = 1.0

    n_total = n_split + n_rows + n_art
    tableau = np.hstack([A, slack, art, b[:, None]])
    basis = np.empty(n_rows, dtype=int)
    basis[~need_art] = n_split + np.where(~need_art)[0]
    basis[need_art] = n_split + n_rows + np.arange(n_art)

    if n_art > 0:
        # Phase 1: minimize the artificial sum.
        cost1 = np.zeros(n_total + 1)
        cost1[n_split + n_rows : n_split + n_rows + n_art] = 1.0
        for i in np.where(need_art)[0]:
            cost1 -= tableau[i]
        status, _ = _simplex_core(tableau, basis, cost1, n_total)
        if status == UNBOUNDED:
            raise LPError("phase-1 simplex reported unbounded")
        if -cost1[-1] > FEASIBILITY_TOL:
            return LPOutcome(INFEASIBLE)
        # Drive remaining artificials out of the basis.
        for i in range(n_rows):
            if basis[i] >= n_split + n_rows:
                pivot_col = -1
                for j in range(n_split + n_rows):
                    if abs(tableau[i, j]) > PIVOT_TOL:
                        pivot_col = j
                        break
                if pivot_col < 0:
                    continue  # redundant row
                piv = tableau[i, pivot_col]
                tableau[i] /= piv
                col = tableau[:, pivot_col].copy()
                col[i] = 0.0
                tableau -= np.outer(col, tableau[i])
                basis[i] = pivot_col

    # Phase 2 on the original columns only.
    keep = n_split + n_rows
    tableau2 = np.hstack([tableau[:, :keep], tableau[:, -1:]])
    cost2 = np.zeros(keep + 1)
    cost2[:n_split] = c
    for i in range(n_rows):
        if basis[i] < keep and abs(cost2[basis[i]]) > 0.0:
            cost2 -= cost2[basis[i]] * tableau2[i]
    status, _ = _simplex_core(tableau2, basis, cost2, keep)
    if status == UNBOUNDED:
        return LPOutcome(UNBOUNDED)

    solution = np.zeros(keep)
    for i in range(n_rows):
        if basis[i] < keep:
            solution[basis[i]] = tableau2[i, -1]
    y = solution[:nvar] - solution[nvar:n_split]
    value = float(lp.objective @ y)
    return LPOutcome(OPTIMAL, value, y)
