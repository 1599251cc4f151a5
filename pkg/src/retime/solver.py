"""Two-pass retiming solver, its dual, velocity-interval propagation and
trajectory extraction.

The primal solver runs a backward pass building the controllable sets
from the desired ending velocity, then a forward pass greedily selecting
the highest admissible control whose next state stays controllable.  The
dual variant mirrors this with reachable sets.  Each solve is
single-threaded and pure; distinct solves may run fully in parallel.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .discretize import DiscretizedProblem, Grid, Parameterization, segment_times
from .lp import INFEASIBLE, OPTIMAL, LPError, solve_1d_u, solve_simplex
from .path import GeometricPath
from .reach import (
    Interval,
    LPCounter,
    build_stage_lp,
    controllable_sets,
    reachable_sets,
)

__all__ = [
    "SOLVED",
    "INFEASIBLE_STATUS",
    "SolveReport",
    "Trajectory",
    "topp_ra",
    "topp_ra_dual",
    "avp",
    "avp_backward",
    "duration",
    "extract_trajectory",
    "recover_slack",
]

SOLVED = "solved"
INFEASIBLE_STATUS = "infeasible"


@dataclass
class SolveReport:
    status: str
    parameterization: Optional[Parameterization]
    controllable: Optional[List[Interval]] = None
    reachable: Optional[List[Interval]] = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def solved(self) -> bool:
        return self.status == SOLVED


@dataclass
class Trajectory:
    """Time-sampled joint-space trajectory recovered from a parameterization."""

    times: np.ndarray  # (S,)
    positions: np.ndarray  # (S, n)
    velocities: np.ndarray  # (S, n)
    accelerations: np.ndarray  # (S, n)
    path_positions: np.ndarray  # (S,)
    path_velocities: np.ndarray  # (S,)
    duration: float


def _validate_boundary(problem: DiscretizedProblem, sdot0: float, sdotN: float):
    if sdot0 < 0.0 or sdotN < 0.0:
        raise ValueError("boundary velocities must be non-negative")
    if sdot0**2 > problem.x_cap or sdotN**2 > problem.x_cap:
        raise ValueError("squared boundary velocity exceeds the state cap")


def _clamp_next(x_next: float, bounds: Interval) -> float:
    x_next = min(x_next, bounds.upper)
    x_next = max(x_next, bounds.lower, 0.0)
    return x_next


def _forward_control(
    problem: DiscretizedProblem,
    i: int,
    x_here: float,
    target: Interval,
    counter: LPCounter,
    maximize: bool = True,
) -> float:
    """Extreme admissible control at stage i keeping x + 2*Delta*u in target."""
    stage = problem.stages[i]
    delta = float(problem.grid.steps[i])
    counter.add(1)
    if not stage.has_slack:
        rows = [(al, be * x_here + ga) for al, be, ga in problem.stage_rows(i)]
        rows.append((2.0 * delta, x_here - target.upper))
        rows.append((-2.0 * delta, target.lower - x_here))
        outcome = solve_1d_u(rows, maximize=maximize)
    else:
        extra = [
            (2.0 * delta, 1.0, -target.upper),
            (-2.0 * delta, -1.0, target.lower),
            (0.0, 1.0, -x_here),
            (0.0, -1.0, x_here),
        ]
        sign = 1.0 if maximize else -1.0
        outcome = solve_simplex(build_stage_lp(stage, (sign, 0.0), extra))
        if outcome.status == OPTIMAL:
            outcome = type(outcome)(
                outcome.status, sign * outcome.value, outcome.argument
            )
    if outcome.status != OPTIMAL:
        raise LPError(
            "forward pass failed at stage %d (%s); controllable sets inconsistent"
            % (i, outcome.status)
        )
    return float(outcome.value if not stage.has_slack else outcome.argument[0])


def topp_ra(problem: DiscretizedProblem, sdot0: float, sdotN: float) -> SolveReport:
    """Time-optimal parameterization between boundary path velocities.

    Backward pass: controllable sets from {sdotN^2}.  Infeasible when a
    set empties or sdot0^2 falls outside the 0-stage set.  Forward pass:
    per stage, the greatest control keeping the next state controllable.
    """
    _validate_boundary(problem, sdot0, sdotN)
    N = problem.N
    counter = LPCounter()
    t0 = time.perf_counter()
    ctrl = controllable_sets(problem, Interval.point(sdotN**2), counter)
    backward_s = time.perf_counter() - t0
    backward_lps = counter.total

    x0 = sdot0**2
    if ctrl[0].is_empty or not ctrl[0].contains(x0):
        return SolveReport(
            INFEASIBLE_STATUS,
            None,
            controllable=ctrl,
            diagnostics={
                "lp_count": counter.total,
                "backward_lp_count": backward_lps,
                "forward_lp_count": 0,
                "backward_seconds": backward_s,
                "forward_seconds": 0.0,
            },
        )

    t1 = time.perf_counter()
    xs = np.empty(N + 1)
    us = np.empty(N)
    xs[0] = x0
    for i in range(N):
        u = _forward_control(problem, i, float(xs[i]), ctrl[i + 1], counter)
        x_next = _clamp_next(xs[i] + 2.0 * problem.grid.steps[i] * u, ctrl[i + 1])
        xs[i + 1] = x_next
        us[i] = (x_next - xs[i]) / (2.0 * problem.grid.steps[i])
    forward_s = time.perf_counter() - t1

    return SolveReport(
        SOLVED,
        Parameterization(xs, us),
        controllable=ctrl,
        diagnostics={
            "lp_count": counter.total,
            "backward_lp_count": backward_lps,
            "forward_lp_count": counter.total - backward_lps,
            "backward_seconds": backward_s,
            "forward_seconds": forward_s,
        },
    )


def _backward_control(
    problem: DiscretizedProblem,
    i: int,
    x_next: float,
    source: Interval,
    counter: LPCounter,
) -> float:
    """Least control at stage i with x = x_next - 2*Delta*u admissible in source."""
    stage = problem.stages[i]
    delta = float(problem.grid.steps[i])
    counter.add(1)
    if not stage.has_slack:
        # Substitute x = x_next - 2*delta*u into the stage rows.
        rows = [
            (al - 2.0 * delta * be, be * x_next + ga)
            for al, be, ga in problem.stage_rows(i)
        ]
        rows.append((-2.0 * delta, x_next - source.upper))
        rows.append((2.0 * delta, source.lower - x_next))
        outcome = solve_1d_u(rows, maximize=False)
    else:
        extra = [
            (2.0 * delta, 1.0, -x_next),
            (-2.0 * delta, -1.0, x_next),
            (0.0, 1.0, -source.upper),
            (0.0, -1.0, source.lower),
        ]
        outcome = solve_simplex(build_stage_lp(stage, (-1.0, 0.0), extra))
        if outcome.status == OPTIMAL:
            outcome = type(outcome)(outcome.status, -outcome.value, outcome.argument)
    if outcome.status != OPTIMAL:
        raise LPError(
            "dual backward pass failed at stage %d (%s); reachable sets inconsistent"
            % (i, outcome.status)
        )
    return float(outcome.value if not stage.has_slack else outcome.argument[0])


def topp_ra_dual(problem: DiscretizedProblem, sdot0: float, sdotN: float) -> SolveReport:
    """Dual solver: forward reachable sets, then backward greedy selection
    of the lowest control whose previous state stays reachable."""
    _validate_boundary(problem, sdot0, sdotN)
    N = problem.N
    counter = LPCounter()
    t0 = time.perf_counter()
    reach = reachable_sets(problem, Interval.point(sdot0**2), counter)
    forward_s = time.perf_counter() - t0
    forward_lps = counter.total

    xN = sdotN**2
    if reach[N].is_empty or not reach[N].contains(xN):
        return SolveReport(
            INFEASIBLE_STATUS,
            None,
            reachable=reach,
            diagnostics={
                "lp_count": counter.total,
                "forward_lp_count": forward_lps,
                "backward_lp_count": 0,
                "forward_seconds": forward_s,
                "backward_seconds": 0.0,
            },
        )

    t1 = time.perf_counter()
    xs = np.empty(N + 1)
    us = np.empty(N)
    xs[N] = xN
    for i in range(N - 1, -1, -1):
        u = _backward_control(problem, i, float(xs[i + 1]), reach[i], counter)
        x_prev = _clamp_next(xs[i + 1] - 2.0 * problem.grid.steps[i] * u, reach[i])
        xs[i] = x_prev
        us[i] = (xs[i + 1] - x_prev) / (2.0 * problem.grid.steps[i])
    backward_s = time.perf_counter() - t1

    return SolveReport(
        SOLVED,
        Parameterization(xs, us),
        reachable=reach,
        diagnostics={
            "lp_count": counter.total,
            "forward_lp_count": forward_lps,
            "backward_lp_count": counter.total - forward_lps,
            "forward_seconds": forward_s,
            "backward_seconds": backward_s,
        },
    )


def avp(problem: DiscretizedProblem, start: Interval) -> Interval:
    """Interval of end velocities reachable from `start`: L_N."""
    return reachable_sets(problem, start)[problem.N]


def avp_backward(problem: DiscretizedProblem, target: Interval) -> Interval:
    """Interval of start velocities from which `target` is controllable: K_0."""
    return controllable_sets(problem, target)[0]


def duration(parameterization: Parameterization, grid: Grid) -> float:
    """Traversal time under piecewise-constant path acceleration."""
    return float(segment_times(parameterization.xs, grid.steps)[-1])


def extract_trajectory(
    path: GeometricPath,
    parameterization: Parameterization,
    grid: Grid,
    dt: float,
) -> Trajectory:
    """Sample q, qd, qdd at 0, dt, 2dt, ..., duration (final point included)."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    xs, us = parameterization.xs, parameterization.us
    times = segment_times(xs, grid.steps)
    total = float(times[-1])
    ts = np.arange(0.0, total, dt)
    if ts.size == 0 or total - ts[-1] > 1e-12:
        ts = np.append(ts, total)
    else:
        ts[-1] = total
    seg = np.clip(np.searchsorted(times, ts, side="right") - 1, 0, us.size - 1)
    tau = ts - times[seg]
    sdot_seg = np.sqrt(np.maximum(xs[seg], 0.0))
    s = grid.points[seg] + sdot_seg * tau + 0.5 * us[seg] * tau * tau
    s = np.clip(s, 0.0, grid.s_end)
    x_s = np.maximum(xs[seg] + 2.0 * (s - grid.points[seg]) * us[seg], 0.0)
    sdot = np.sqrt(x_s)
    q = path.eval(s, 0)
    qp = path.eval(s, 1)
    qpp = path.eval(s, 2)
    qd = qp * sdot[:, None]
    qdd = qpp * x_s[:, None] + qp * us[seg][:, None]
    return Trajectory(
        times=ts,
        positions=q,
        velocities=qd,
        accelerations=qdd,
        path_positions=s,
        path_velocities=sdot,
        duration=total,
    )


def recover_slack(
    problem: DiscretizedProblem, i: int, u: float, x: float
) -> np.ndarray:
    """A feasible slack vector at stage i for the given control-state pair.

    One simplex feasibility solve; the returned vector satisfies the
    stage's coupling and polytope rows but is not minimum-norm.
    """
    stage = problem.stages[i]
    if not stage.has_slack:
        raise ValueError("stage %d has no slack blocks" % i)
    extra = [
        (1.0, 0.0, -u),
        (-1.0, 0.0, u),
        (0.0, 1.0, -x),
        (0.0, -1.0, x),
    ]
    outcome = solve_simplex(build_stage_lp(stage, (0.0, 0.0), extra))
    if outcome.status == INFEASIBLE:
        raise ValueError(
            "control-state pair (%r, %r) is not admissible at stage %d" % (u, x, i)
        )
    if outcome.status != OPTIMAL:
        raise LPError("slack recovery failed at stage %d (%s)" % (i, outcome.status))
    return outcome.argument[2:]
