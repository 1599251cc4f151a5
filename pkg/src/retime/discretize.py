"""Grid construction and per-stage linearization of path constraints.

Builds, for every grid point s_i, the stacked canonical rows

    alpha * u + beta * x + gamma <= 0

together with any slack blocks, under either the collocation scheme
(rows enforced at s_i only) or the first-order interpolation scheme
(rows of s_i plus the rows of s_{i+1} with the transition
x_{i+1} = x + 2 Delta u substituted).  Every stage carries the implicit
rows x >= 0 and x <= x_cap.

Stage construction is independent across i; a DiscretizedProblem is
immutable afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .constraints import (
    CanonicalLinearConstraint,
    FirstOrderBound,
    PolytopeSlackConstraint,
    SlackBlock,
)
from .path import GeometricPath

__all__ = [
    "DEFAULT_X_CAP",
    "Grid",
    "StageData",
    "DiscretizedProblem",
    "Parameterization",
    "make_grid",
    "collocation",
    "interpolation_first_order",
    "constraint_satisfaction_error",
    "segment_times",
]

DEFAULT_X_CAP = 1e8

COLLOCATION = "collocation"
INTERPOLATION = "interpolation"


class Grid:
    """Grid points s_0 = 0 < ... < s_N over the path parameter."""

    def __init__(self, points):
        points = np.asarray(points, dtype=float)
        if points.ndim != 1 or points.size < 2:
            raise ValueError("grid needs at least two points")
        steps = np.diff(points)
        if np.any(steps <= 0):
            raise ValueError("grid points must be strictly increasing")
        self.points = points
        self.steps = steps
        self.points.setflags(write=False)
        self.steps.setflags(write=False)

    @property
    def N(self) -> int:
        return self.points.size - 1

    @property
    def s_end(self) -> float:
        return float(self.points[-1])


def make_grid(s_end: float, N: int) -> Grid:
    """Uniform grid with N segments over [0, s_end]."""
    if s_end <= 0:
        raise ValueError("s_end must be positive")
    if N < 1:
        raise ValueError("N must be at least 1")
    return Grid(np.linspace(0.0, float(s_end), int(N) + 1))


@dataclass(frozen=True)
class StageData:
    """Stacked rows and slack blocks of one stage."""

    alpha: np.ndarray  # (R,)
    beta: np.ndarray  # (R,)
    gamma: np.ndarray  # (R,)
    blocks: Tuple[SlackBlock, ...] = ()

    @property
    def has_slack(self) -> bool:
        return len(self.blocks) > 0

    @property
    def row_count(self) -> int:
        return self.alpha.size

    def rows_list(self) -> List[Tuple[float, float, float]]:
        return list(zip(self.alpha.tolist(), self.beta.tolist(), self.gamma.tolist()))


class DiscretizedProblem:
    """Grid plus per-stage linearized constraint data."""

    def __init__(self, grid: Grid, stages: Sequence[StageData], x_cap: float,
                 scheme: str = COLLOCATION):
        if len(stages) != grid.N + 1:
            raise ValueError("expected %d stages, got %d" % (grid.N + 1, len(stages)))
        self.grid = grid
        self.stages = tuple(stages)
        self.x_cap = float(x_cap)
        self.scheme = scheme
        # Row tuples cached per stage for the fast scalar LP path.
        self._row_cache: List[Optional[List[Tuple[float, float, float]]]] = [
            None
        ] * len(self.stages)

    @property
    def N(self) -> int:
        return self.grid.N

    def stage_rows(self, i: int) -> List[Tuple[float, float, float]]:
        cached = self._row_cache[i]
        if cached is None:
            cached = self.stages[i].rows_list()
            self._row_cache[i] = cached
        return cached

    @property
    def has_slack(self) -> bool:
        return any(st.has_slack for st in self.stages)


@dataclass
class Parameterization:
    """States x_0..x_N (squared path velocity) and controls u_0..u_{N-1}."""

    xs: np.ndarray
    us: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        us = np.asarray(self.us, dtype=float)
        if xs.size != us.size + 1:
            raise ValueError("xs must have one more entry than us")
        if np.any(xs < -1e-12):
            raise ValueError("negative squared velocity beyond tolerance")
        self.xs = np.maximum(xs, 0.0)
        self.us = us

    def check_transition(self, grid: Grid, tol: float = 1e-9) -> float:
        """Max reconstruction error of x_{i+1} = x_i + 2 Delta_i u_i."""
        recon = self.xs[:-1] + 2.0 * grid.steps * self.us
        err = float(np.max(np.abs(recon - self.xs[1:]))) if self.us.size else 0.0
        if err > tol:
            raise ValueError("transition relation violated by %g" % err)
        return err


def _collocation_stage(
    path: GeometricPath,
    constraints: Sequence[object],
    s: float,
    x_cap: float,
) -> StageData:
    alphas, betas, gammas = [], [], []
    blocks: List[SlackBlock] = []
    for con in constraints:
        if isinstance(con, CanonicalLinearConstraint):
            a, b, c = con.rows(s)
            alphas.append(a)
            betas.append(b)
            gammas.append(c)
        elif isinstance(con, FirstOrderBound):
            xu = min(con.x_upper(s), x_cap)
            alphas.append(np.array([0.0]))
            betas.append(np.array([1.0]))
            gammas.append(np.array([-xu]))
        elif isinstance(con, PolytopeSlackConstraint):
            blocks.append(con.block(s))
        else:
            raise TypeError("unsupported constraint type: %r" % type(con).__name__)
    # Implicit state bounds 0 <= x <= x_cap.
    alphas.append(np.array([0.0, 0.0]))
    betas.append(np.array([-1.0, 1.0]))
    gammas.append(np.array([0.0, -x_cap]))
    return StageData(
        alpha=np.concatenate(alphas),
        beta=np.concatenate(betas),
        gamma=np.concatenate(gammas),
        blocks=tuple(blocks),
    )


def _shift_stage(stage: StageData, delta: float) -> StageData:
    """Substitute x_{i+1} = x + 2 delta u into next-point rows and blocks."""
    return StageData(
        alpha=stage.alpha + 2.0 * delta * stage.beta,
        beta=stage.beta.copy(),
        gamma=stage.gamma.copy(),
        blocks=tuple(
            SlackBlock(
                a=blk.a + 2.0 * delta * blk.b,
                b=blk.b.copy(),
                c=blk.c.copy(),
                F=blk.F,
                g=blk.g,
                H=blk.H,
            )
            for blk in stage.blocks
        ),
    )


def _check_inputs(path: GeometricPath, constraints: Sequence[object], grid: Grid):
    if not constraints:
        raise ValueError("constraint list must be non-empty")
    if grid.s_end > path.s_end + 1e-9:
        raise ValueError(
            "grid end %r exceeds path domain end %r" % (grid.s_end, path.s_end)
        )


def collocation(
    path: GeometricPath,
    constraints: Sequence[object],
    grid: Grid,
    x_cap: float = DEFAULT_X_CAP,
) -> DiscretizedProblem:
    """Enforce all constraint rows at each grid point."""
    _check_inputs(path, constraints, grid)
    stages = [
        _collocation_stage(path, constraints, float(s), x_cap) for s in grid.points
    ]
    return DiscretizedProblem(grid, stages, x_cap, scheme=COLLOCATION)


def interpolation_first_order(
    path: GeometricPath,
    constraints: Sequence[object],
    grid: Grid,
    x_cap: float = DEFAULT_X_CAP,
) -> DiscretizedProblem:
    """Enforce rows at both segment endpoints, substituting the transition.

    Stage i < N stacks the collocation rows of s_i with the rows of
    s_{i+1} rewritten in (u, x_i) via x_{i+1} = x_i + 2 Delta_i u.  Slack
    blocks of the two endpoints keep independent slack variables.  Stage N
    uses the s_N rows only.
    """
    _check_inputs(path, constraints, grid)
    point_stages = [
        _collocation_stage(path, constraints, float(s), x_cap) for s in grid.points
    ]
    stages: List[StageData] = []
    for i in range(grid.N):
        here = point_stages[i]
        ahead = _shift_stage(point_stages[i + 1], float(grid.steps[i]))
        stages.append(
            StageData(
                alpha=np.concatenate([here.alpha, ahead.alpha]),
                beta=np.concatenate([here.beta, ahead.beta]),
                gamma=np.concatenate([here.gamma, ahead.gamma]),
                blocks=here.blocks + ahead.blocks,
            )
        )
    stages.append(point_stages[grid.N])
    return DiscretizedProblem(grid, stages, x_cap, scheme=INTERPOLATION)


def segment_times(xs: np.ndarray, steps: np.ndarray) -> np.ndarray:
    roots = np.sqrt(np.maximum(xs, 0.0))
    denom = roots[:-1] + roots[1:]
    if np.any(denom <= 0.0):
        i = int(np.argmax(denom <= 0.0))
        raise ValueError(
            "segment %d has zero velocity at both endpoints: infinite traversal time" % i
        )
    times = np.zeros(xs.size)
    times[1:] = np.cumsum(2.0 * steps / denom)
    return times


def constraint_satisfaction_error(
    path: GeometricPath,
    constraints: Sequence[object],
    parameterization: Parameterization,
    grid: Grid,
    sample_dt: float = 1e-3,
) -> Tuple[float, float]:
    """Greatest continuous-time constraint violation of a parameterization.

    Samples the trajectory induced by the piecewise-constant controls at
    `sample_dt`, evaluates every constraint row at the true path position
    with x(s) = x_i + 2 (s - s_i) u_i, and returns the largest positive
    violation, absolute and relative to the row's bound magnitude.  Rows
    whose bound magnitude is below 1e-9 contribute to the absolute
    maximum only.  Slack constraints are checked on the reconstructed
    physical quantities and require an identity coupling.
    """
    xs, us = parameterization.xs, parameterization.us
    if xs.size == 0 or us.size == 0:
        raise ValueError("parameterization is empty")
    steps = grid.steps
    times = segment_times(xs, steps)
    duration = float(times[-1])
    ts = np.arange(0.0, duration, sample_dt)
    if ts.size == 0 or duration - ts[-1] > 1e-12:
        ts = np.append(ts, duration)
    seg = np.clip(np.searchsorted(times, ts, side="right") - 1, 0, us.size - 1)
    tau = ts - times[seg]
    sdot0 = np.sqrt(np.maximum(xs[seg], 0.0))
    s_samples = grid.points[seg] + sdot0 * tau + 0.5 * us[seg] * tau * tau
    s_samples = np.clip(s_samples, 0.0, grid.s_end)
    x_samples = np.maximum(xs[seg] + 2.0 * (s_samples - grid.points[seg]) * us[seg], 0.0)
    u_samples = us[seg]

    max_abs = 0.0
    max_rel = 0.0
    for con in constraints:
        if isinstance(con, CanonicalLinearConstraint):
            a, b, c = con.rows_batch(s_samples)
            viol = np.maximum(
                a * u_samples[:, None] + b * x_samples[:, None] + c, 0.0
            )
            if viol.size == 0:
                continue
            max_abs = max(max_abs, float(np.max(viol)))
            denom = np.abs(c)
            big = denom >= 1e-9
            if np.any(big):
                max_rel = max(max_rel, float(np.max(viol[big] / denom[big])))
        elif isinstance(con, FirstOrderBound):
            xu = con.x_upper_batch(s_samples)
            viol = np.maximum(x_samples - xu, 0.0)
            max_abs = max(max_abs, float(np.max(viol)))
            big = np.abs(xu) >= 1e-9
            if np.any(big):
                max_rel = max(max_rel, float(np.max(viol[big] / np.abs(xu[big]))))
        elif isinstance(con, PolytopeSlackConstraint):
            for s, u, x in zip(s_samples, u_samples, x_samples):
                blk = con.block(float(s))
                if blk.H is not None:
                    raise ValueError(
                        "error measurement supports identity-coupled slack blocks only"
                    )
                quantity = blk.a * u + blk.b * x + blk.c
                viol = blk.F @ quantity - blk.g
                v = float(np.max(viol)) if viol.size else 0.0
                if v > 0.0:
                    max_abs = max(max_abs, v)
                    denom = np.abs(blk.g)
                    big = denom >= 1e-9
                    if np.any(big):
                        rel = float(np.max(np.maximum(viol[big], 0.0) / denom[big]))
                        max_rel = max(max_rel, rel)
        else:
            raise TypeError("unsupported constraint type: %r" % type(con).__name__)
    return max_abs, max_rel
