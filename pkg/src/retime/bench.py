"""Random-instance generation, solve verification and the benchmark harness.

The random recipe: 5 waypoints with coordinates uniform in [-1, 1] at
path positions {0, 0.25, 0.5, 0.75, 1}, acceleration bounds with the
upper limit uniform in [0.5, 2] and an independently drawn negative lower
limit, and velocity bounds uniform in [0.5, 2].  Bounds always contain
zero, so every generated instance is feasible.  Each instance carries
m = 2n + 2 constraint inequalities (2n acceleration rows plus the two
squared-velocity bounds).

Benchmark trials may run in parallel across instances; each solve remains
single-threaded so per-solve timings stay meaningful.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from statistics import mean, median
from typing import List, Optional, Sequence

import numpy as np

from .constraints import joint_acceleration_bounds, joint_velocity_bounds
from .discretize import (
    COLLOCATION,
    DEFAULT_X_CAP,
    DiscretizedProblem,
    Parameterization,
    collocation,
    constraint_satisfaction_error,
    interpolation_first_order,
    make_grid,
)
from .path import GeometricPath, spline_from_waypoints
from .solver import duration as solve_duration
from .solver import topp_ra

__all__ = [
    "Instance",
    "random_instance",
    "zero_inertia_instance",
    "monotone_instance",
    "unit_time_scale_instance",
    "has_zero_inertia",
    "discretize_instance",
    "max_stage_residual",
    "BenchmarkRow",
    "run_benchmark",
    "grid_study_rows",
]

WAYPOINT_POSITIONS = (0.0, 0.25, 0.5, 0.75, 1.0)


@dataclass
class Instance:
    path: GeometricPath
    accel_lo: np.ndarray
    accel_hi: np.ndarray
    vmax: np.ndarray
    seed: int

    @property
    def n(self) -> int:
        return self.path.dof

    @property
    def m(self) -> int:
        return 2 * self.n + 2

    def constraints(self) -> list:
        return [
            joint_acceleration_bounds(self.path, self.accel_lo, self.accel_hi),
            joint_velocity_bounds(self.path, self.vmax),
        ]


def random_instance(n: int, seed: int) -> Instance:
    rng = np.random.default_rng(seed)
    waypoints = rng.uniform(-1.0, 1.0, size=(len(WAYPOINT_POSITIONS), n))
    path = spline_from_waypoints(list(zip(WAYPOINT_POSITIONS, waypoints)))
    hi = rng.uniform(0.5, 2.0, size=n)
    lo = -rng.uniform(0.5, 2.0, size=n)
    vmax = rng.uniform(0.5, 2.0, size=n)
    return Instance(path, lo, hi, vmax, seed)


def has_zero_inertia(path: GeometricPath, samples: int = 2001) -> bool:
    """True when some joint tangent q'_j crosses zero inside the domain."""
    s = np.linspace(0.0, path.s_end, samples)
    qp = path.eval(s, 1)
    signs = np.sign(qp)
    crossings = (signs[:-1] * signs[1:] < 0) | (np.abs(qp[:-1]) < 1e-12)
    return bool(np.any(crossings))


def zero_inertia_instance(n: int, seed: int) -> Instance:
    """Random instance guaranteed to contain a zero-inertia point."""
    for attempt in range(100):
        inst = random_instance(n, seed + 7919 * attempt)
        if has_zero_inertia(inst.path):
            return inst
    raise RuntimeError("could not generate a zero-inertia instance")


def monotone_instance(n: int, seed: int) -> Instance:
    """Random instance whose joint tangents never vanish (no zero-inertia).

    Waypoint coordinates are cumulative sums of bounded increments, so
    every joint moves strictly monotonically along the path and the
    maximal transition function stays monotone at practical step sizes.
    """
    rng = np.random.default_rng(seed)
    steps = rng.uniform(0.15, 0.5, (len(WAYPOINT_POSITIONS) - 1, n))
    start = rng.uniform(-1.0, 0.0, n)
    pts = start + np.vstack([np.zeros(n), np.cumsum(steps, axis=0)])
    sign = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    pts = pts * sign
    path = spline_from_waypoints(list(zip(WAYPOINT_POSITIONS, pts)))
    probe = np.linspace(0.0, path.s_end, 801)
    tangents = path.eval(probe, 1)
    if not np.all(np.min(np.abs(tangents), axis=0) > 1e-2):
        return monotone_instance(n, seed + 7919)
    hi = rng.uniform(0.5, 2.0, size=n)
    lo = -rng.uniform(0.5, 2.0, size=n)
    vmax = rng.uniform(0.5, 2.0, size=n)
    return Instance(path, lo, hi, vmax, seed)


def unit_time_scale_instance(n: int, seed: int, calibration_N: int = 200) -> Instance:
    """Zero-inertia instance rescaled so the optimal duration is near 1 s.

    Scaling the velocity bounds by d and the acceleration bounds by d^2
    divides the optimal traversal time by d exactly.
    """
    inst = zero_inertia_instance(n, seed)
    problem = discretize_instance(inst, calibration_N)
    report = topp_ra(problem, 0.0, 0.0)
    if not report.solved:
        raise RuntimeError("calibration solve failed for seed %d" % seed)
    d = solve_duration(report.parameterization, problem.grid)
    return Instance(
        inst.path,
        inst.accel_lo * d * d,
        inst.accel_hi * d * d,
        inst.vmax * d,
        seed,
    )


def discretize_instance(
    inst: Instance,
    N: int,
    scheme: str = COLLOCATION,
    x_cap: float = DEFAULT_X_CAP,
) -> DiscretizedProblem:
    grid = make_grid(inst.path.s_end, N)
    builder = collocation if scheme == COLLOCATION else interpolation_first_order
    return builder(inst.path, inst.constraints(), grid, x_cap=x_cap)


def max_stage_residual(problem: DiscretizedProblem, param: Parameterization) -> float:
    """Worst stage-row residual of a parameterization (canonical stages).

    Stages 0..N-1 evaluate their rows at (u_i, x_i); the final stage is
    checked at its most-feasible control since no control is stored there.
    """
    worst = 0.0
    xs, us = param.xs, param.us
    for i in range(problem.N):
        st = problem.stages[i]
        resid = st.alpha * us[i] + st.beta * xs[i] + st.gamma
        if resid.size:
            worst = max(worst, float(np.max(resid)))
    st = problem.stages[problem.N]
    x = float(xs[-1])
    vals = st.beta * x + st.gamma
    u_hi, u_lo = np.inf, -np.inf
    pos = st.alpha > 0
    neg = st.alpha < 0
    if np.any(pos):
        u_hi = float(np.min(-vals[pos] / st.alpha[pos]))
    if np.any(neg):
        u_lo = float(np.max(-vals[neg] / st.alpha[neg]))
    if u_lo <= u_hi:
        u = min(max(0.0, u_lo), u_hi)
    else:
        u = 0.5 * (u_lo + u_hi)
    resid = st.alpha * u + vals
    worst = max(worst, float(np.max(resid)))
    return worst


@dataclass
class BenchmarkRow:
    m: int
    n: int
    N: int
    trials: int
    success_rate: float
    mean_time_per_point: float
    median_time_per_point: float
    total_lp_count: int


def _bench_one(args):
    n, seed, N, scheme, x_cap = args
    inst = random_instance(n, seed)
    problem = discretize_instance(inst, N, scheme=scheme, x_cap=x_cap)
    t0 = time.perf_counter()
    report = topp_ra(problem, 0.0, 0.0)
    elapsed = time.perf_counter() - t0
    lp_count = report.diagnostics["lp_count"]
    if not problem.has_slack and report.solved and lp_count != 3 * N + 2:
        raise AssertionError(
            "canonical solve used %d LPs, expected %d" % (lp_count, 3 * N + 2)
        )
    return {
        "n": n,
        "seed": seed,
        "solved": report.solved,
        "seconds": elapsed,
        "lp_count": lp_count,
    }


def run_benchmark(
    n_list: Sequence[int],
    trials: int,
    N: int,
    seed: int,
    scheme: str = COLLOCATION,
    x_cap: float = DEFAULT_X_CAP,
    jobs: int = 1,
) -> List[BenchmarkRow]:
    """Solve random instances per dof count and aggregate timing rows."""
    rows: List[BenchmarkRow] = []
    for n in n_list:
        tasks = [
            (n, seed + 1000 * n + t, N, scheme, x_cap) for t in range(trials)
        ]
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(_bench_one, tasks))
        else:
            results = [_bench_one(task) for task in tasks]
        per_point = [r["seconds"] / (N + 1) for r in results]
        rows.append(
            BenchmarkRow(
                m=2 * n + 2,
                n=n,
                N=N,
                trials=trials,
                success_rate=sum(r["solved"] for r in results) / trials,
                mean_time_per_point=mean(per_point),
                median_time_per_point=median(per_point),
                total_lp_count=sum(r["lp_count"] for r in results),
            )
        )
    return rows


def grid_study_rows(
    inst: Instance,
    N_list: Sequence[int],
    schemes: Sequence[str],
    sample_dt: float = 1e-3,
    x_cap: float = DEFAULT_X_CAP,
) -> List[dict]:
    """Duration and constraint-error rows per (scheme, N)."""
    out: List[dict] = []
    constraints = inst.constraints()
    for scheme in schemes:
        for N in N_list:
            problem = discretize_instance(inst, N, scheme=scheme, x_cap=x_cap)
            report = topp_ra(problem, 0.0, 0.0)
            if not report.solved:
                out.append(
                    {
                        "scheme": scheme,
                        "N": N,
                        "duration": float("nan"),
                        "max_abs_error": float("nan"),
                        "max_rel_error": float("nan"),
                    }
                )
                continue
            max_abs, max_rel = constraint_satisfaction_error(
                inst.path, constraints, report.parameterization, problem.grid, sample_dt
            )
            out.append(
                {
                    "scheme": scheme,
                    "N": N,
                    "duration": solve_duration(report.parameterization, problem.grid),
                    "max_abs_error": max_abs,
                    "max_rel_error": max_rel,
                }
            )
    return out
