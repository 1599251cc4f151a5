"""Command-line surface: solve, avp, benchmark, grid-study and verify.

Problem documents are JSON and validate against PROBLEM_SCHEMA before any
work happens; rejection messages name the offending field.  Result JSON
is byte-identical for identical documents and seeds; wall-clock timings
go to a separate file.  CSV floats carry 17 significant digits.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
from jsonschema import Draft202012Validator

from . import bench
from .constraints import (
    CanonicalLinearConstraint,
    PolytopeSlackConstraint,
    SlackBlock,
    joint_acceleration_bounds,
    joint_velocity_bounds,
)
from .discretize import (
    COLLOCATION,
    DEFAULT_X_CAP,
    INTERPOLATION,
    collocation,
    constraint_satisfaction_error,
    interpolation_first_order,
    make_grid,
)
from .oracle import DPConfig, dp_controllable, dp_optimal_cost
from .path import GeometricPath, spline_from_waypoints
from .reach import (
    Interval,
    UncertaintyVertexSet,
    controllable_sets,
    reachable_sets,
    robust_controllable_sets,
)
from .solver import duration, extract_trajectory, topp_ra

__all__ = ["PROBLEM_SCHEMA", "RESULT_SCHEMA", "main", "load_document", "build_problem"]

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_INFEASIBLE = 2

_NUMBER_ARRAY = {"type": "array", "items": {"type": "number"}, "minItems": 1}
_MATRIX = {"type": "array", "items": _NUMBER_ARRAY, "minItems": 1}

_CONSTRAINT_SCHEMA = {
    "type": "object",
    "oneOf": [
        {
            "properties": {
                "type": {"const": "joint_acceleration"},
                "lo": _NUMBER_ARRAY,
                "hi": _NUMBER_ARRAY,
            },
            "required": ["type", "lo", "hi"],
            "additionalProperties": False,
        },
        {
            "properties": {
                "type": {"const": "joint_velocity"},
                "vmax": _NUMBER_ARRAY,
            },
            "required": ["type", "vmax"],
            "additionalProperties": False,
        },
        {
            "properties": {
                "type": {"const": "canonical_rows"},
                "s": _NUMBER_ARRAY,
                "a": _MATRIX,
                "b": _MATRIX,
                "c": _MATRIX,
            },
            "required": ["type", "s", "a", "b", "c"],
            "additionalProperties": False,
        },
        {
            "properties": {
                "type": {"const": "polytope_slack"},
                "s": _NUMBER_ARRAY,
                "a": _MATRIX,
                "b": _MATRIX,
                "c": _MATRIX,
                "F": _MATRIX,
                "g": _NUMBER_ARRAY,
                "H": _MATRIX,
            },
            "required": ["type", "s", "a", "b", "c", "F", "g"],
            "additionalProperties": False,
        },
    ],
}

PROBLEM_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "retime problem document",
    "type": "object",
    "properties": {
        "path": {
            "type": "object",
            "oneOf": [
                {
                    "properties": {
                        "waypoints": {
                            "type": "array",
                            "minItems": 2,
                            "items": {
                                "type": "object",
                                "properties": {
                                    "s": {"type": "number"},
                                    "q": _NUMBER_ARRAY,
                                },
                                "required": ["s", "q"],
                                "additionalProperties": False,
                            },
                        }
                    },
                    "required": ["waypoints"],
                    "additionalProperties": False,
                },
                {
                    "properties": {
                        "pieces": {
                            "type": "object",
                            "properties": {
                                "breakpoints": _NUMBER_ARRAY,
                                "coefficients": {
                                    "type": "array",
                                    "items": _MATRIX,
                                    "minItems": 1,
                                },
                            },
                            "required": ["breakpoints", "coefficients"],
                            "additionalProperties": False,
                        }
                    },
                    "required": ["pieces"],
                    "additionalProperties": False,
                },
            ],
        },
        "constraints": {"type": "array", "items": _CONSTRAINT_SCHEMA, "minItems": 1},
        "s_end": {"type": "number", "exclusiveMinimum": 0},
        "N": {"type": "integer", "minimum": 1},
        "scheme": {"enum": [COLLOCATION, INTERPOLATION]},
        "sdot0": {"type": "number", "minimum": 0},
        "sdotN": {"type": "number", "minimum": 0},
        "interval": {
            "type": "array",
            "items": {"type": "number", "minimum": 0},
            "minItems": 2,
            "maxItems": 2,
        },
        "x_cap": {"type": "number", "exclusiveMinimum": 0},
        "seed": {"type": "integer"},
        "uncertainty": {
            "type": "object",
            "properties": {
                "vertices": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "array",
                        "items": _CONSTRAINT_SCHEMA,
                        "minItems": 1,
                    },
                }
            },
            "required": ["vertices"],
            "additionalProperties": False,
        },
    },
    "required": ["path", "constraints", "s_end", "N"],
    "additionalProperties": False,
}

RESULT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "retime solve result",
    "type": "object",
    "properties": {
        "status": {"enum": ["solved", "infeasible"]},
        "duration": {"type": ["number", "null"]},
        "xs": {"type": ["array", "null"], "items": {"type": "number"}},
        "us": {"type": ["array", "null"], "items": {"type": "number"}},
        "controllable_lower": {"type": "array", "items": {"type": ["number", "null"]}},
        "controllable_upper": {"type": "array", "items": {"type": ["number", "null"]}},
        "scheme": {"enum": [COLLOCATION, INTERPOLATION]},
        "N": {"type": "integer"},
        "seed": {"type": ["integer", "null"]},
    },
    "required": [
        "status",
        "duration",
        "xs",
        "us",
        "controllable_lower",
        "controllable_upper",
    ],
    "additionalProperties": False,
}


class DocumentError(ValueError):
    """Problem document failed validation; message names the field."""


def _json_pointer(error) -> str:
    return "/" + "/".join(str(p) for p in error.absolute_path)


def load_document(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise DocumentError("cannot read document: %s" % exc) from exc
    except json.JSONDecodeError as exc:
        raise DocumentError("document is not valid JSON: %s" % exc) from exc
    validate_document(doc)
    return doc


def validate_document(doc: dict) -> None:
    validator = Draft202012Validator(PROBLEM_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise DocumentError("invalid field at %s: %s" % (_json_pointer(err), err.message))


def _build_path(spec: dict) -> GeometricPath:
    if "waypoints" in spec:
        pts = [(w["s"], w["q"]) for w in spec["waypoints"]]
        return spline_from_waypoints(pts)
    pieces = spec["pieces"]
    return GeometricPath(
        np.asarray(pieces["breakpoints"], dtype=float),
        np.asarray(pieces["coefficients"], dtype=float),
    )


def _tabulated_rows(desc: dict) -> CanonicalLinearConstraint:
    s_tab = np.asarray(desc["s"], dtype=float)
    a_tab = np.asarray(desc["a"], dtype=float)
    b_tab = np.asarray(desc["b"], dtype=float)
    c_tab = np.asarray(desc["c"], dtype=float)
    if not (a_tab.shape == b_tab.shape == c_tab.shape) or a_tab.shape[0] != s_tab.size:
        raise DocumentError("canonical_rows tables must share shape (len(s), m)")

    def supplier(s: float):
        a = np.array([np.interp(s, s_tab, a_tab[:, j]) for j in range(a_tab.shape[1])])
        b = np.array([np.interp(s, s_tab, b_tab[:, j]) for j in range(b_tab.shape[1])])
        c = np.array([np.interp(s, s_tab, c_tab[:, j]) for j in range(c_tab.shape[1])])
        return a, b, c

    return CanonicalLinearConstraint(supplier, name="canonical_rows")


def _tabulated_slack(desc: dict) -> PolytopeSlackConstraint:
    s_tab = np.asarray(desc["s"], dtype=float)
    a_tab = np.asarray(desc["a"], dtype=float)
    b_tab = np.asarray(desc["b"], dtype=float)
    c_tab = np.asarray(desc["c"], dtype=float)
    F = np.asarray(desc["F"], dtype=float)
    g = np.asarray(desc["g"], dtype=float)
    H = np.asarray(desc["H"], dtype=float) if "H" in desc else None
    if not (a_tab.shape == b_tab.shape == c_tab.shape) or a_tab.shape[0] != s_tab.size:
        raise DocumentError("polytope_slack tables must share shape (len(s), d)")

    def supplier(s: float) -> SlackBlock:
        a = np.array([np.interp(s, s_tab, a_tab[:, j]) for j in range(a_tab.shape[1])])
        b = np.array([np.interp(s, s_tab, b_tab[:, j]) for j in range(b_tab.shape[1])])
        c = np.array([np.interp(s, s_tab, c_tab[:, j]) for j in range(c_tab.shape[1])])
        return SlackBlock(a=a, b=b, c=c, F=F, g=g, H=H)

    return PolytopeSlackConstraint(supplier, name="polytope_slack")


def _build_constraints(path: GeometricPath, descriptors: Sequence[dict]) -> list:
    out = []
    for desc in descriptors:
        kind = desc["type"]
        if kind == "joint_acceleration":
            out.append(joint_acceleration_bounds(path, desc["lo"], desc["hi"]))
        elif kind == "joint_velocity":
            out.append(joint_velocity_bounds(path, desc["vmax"]))
        elif kind == "canonical_rows":
            out.append(_tabulated_rows(desc))
        elif kind == "polytope_slack":
            out.append(_tabulated_slack(desc))
        else:  # unreachable behind the schema
            raise DocumentError("unknown constraint type %r" % kind)
    return out


def build_problem(doc: dict, N: Optional[int] = None, scheme: Optional[str] = None,
                  x_cap: Optional[float] = None):
    """Instantiate (path, constraints, problem) from a validated document."""
    path = _build_path(doc["path"])
    s_end = float(doc["s_end"])
    if s_end > path.s_end + 1e-9:
        raise DocumentError(
            "invalid field at /s_end: %r exceeds the path domain end %r"
            % (s_end, path.s_end)
        )
    constraints = _build_constraints(path, doc["constraints"])
    N = int(N if N is not None else doc["N"])
    scheme = scheme or doc.get("scheme", COLLOCATION)
    x_cap = float(x_cap if x_cap is not None else doc.get("x_cap", DEFAULT_X_CAP))
    grid = make_grid(s_end, N)
    builder = collocation if scheme == COLLOCATION else interpolation_first_order
    problem = builder(path, constraints, grid, x_cap=x_cap)
    return path, constraints, problem


def _float_str(value: float) -> str:
    return "%.17g" % value


def _interval_bounds(intervals) -> tuple:
    lower = [None if iv.is_empty else iv.lower for iv in intervals]
    upper = [None if iv.is_empty else iv.upper for iv in intervals]
    return lower, upper


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def cmd_solve(args) -> int:
    doc = load_document(args.document)
    path, constraints, problem = build_problem(
        doc, N=args.N, scheme=args.scheme, x_cap=args.x_cap
    )
    if "uncertainty" in doc:
        raise DocumentError(
            "invalid field at /uncertainty: robust runs are exposed through "
            "'avp --direction backward'"
        )
    sdot0 = float(doc.get("sdot0", 0.0))
    sdotN = float(doc.get("sdotN", 0.0))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    t0 = time.perf_counter()
    report = topp_ra(problem, sdot0, sdotN)
    solve_seconds = time.perf_counter() - t0

    lower, upper = _interval_bounds(report.controllable)
    result = {
        "status": report.status,
        "duration": None,
        "xs": None,
        "us": None,
        "controllable_lower": lower,
        "controllable_upper": upper,
        "scheme": problem.scheme,
        "N": problem.N,
        "seed": doc.get("seed"),
    }
    if report.solved:
        param = report.parameterization
        result["duration"] = duration(param, problem.grid)
        result["xs"] = param.xs.tolist()
        result["us"] = param.us.tolist()
        traj = extract_trajectory(path, param, problem.grid, args.dt)
        with open(out_dir / "trajectory.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            n = path.dof
            header = (
                ["t"]
                + ["q%d" % j for j in range(n)]
                + ["qd%d" % j for j in range(n)]
                + ["qdd%d" % j for j in range(n)]
                + ["s", "sdot"]
            )
            writer.writerow(header)
            for k in range(traj.times.size):
                row = (
                    [traj.times[k]]
                    + list(traj.positions[k])
                    + list(traj.velocities[k])
                    + list(traj.accelerations[k])
                    + [traj.path_positions[k], traj.path_velocities[k]]
                )
                writer.writerow(_float_str(v) for v in row)

    Draft202012Validator(RESULT_SCHEMA).validate(result)
    _write_json(out_dir / "result.json", result)
    _write_json(
        out_dir / "timings.json",
        {"solve_seconds": solve_seconds, "diagnostics": report.diagnostics},
    )
    print(json.dumps({"status": report.status, "duration": result["duration"]}))
    return EXIT_OK if report.solved else EXIT_INFEASIBLE


def cmd_avp(args) -> int:
    doc = load_document(args.document)
    if "interval" not in doc:
        raise DocumentError("invalid field at /interval: required for avp")
    _, _, problem = build_problem(doc, N=args.N, scheme=args.scheme, x_cap=args.x_cap)
    lo, hi = (float(v) for v in doc["interval"])
    seed_interval = Interval(lo, hi) if hi >= lo else Interval(np.inf, -np.inf)
    if args.direction == "forward":
        if "uncertainty" in doc:
            raise DocumentError(
                "invalid field at /uncertainty: only the backward direction "
                "supports uncertainty vertex lists"
            )
        sets = reachable_sets(problem, seed_interval)
        result_interval = sets[problem.N]
    else:
        if "uncertainty" in doc:
            vertex_problems = []
            path = _build_path(doc["path"])
            for vertex in doc["uncertainty"]["vertices"]:
                cons = _build_constraints(path, vertex)
                builder = (
                    collocation
                    if problem.scheme == COLLOCATION
                    else interpolation_first_order
                )
                vertex_problems.append(
                    builder(path, cons, problem.grid, x_cap=problem.x_cap)
                )
            vertices = UncertaintyVertexSet.from_problems(vertex_problems)
            sets = robust_controllable_sets(problem, seed_interval, vertices)
        else:
            sets = controllable_sets(problem, seed_interval)
        result_interval = sets[0]

    payload = {
        "direction": args.direction,
        "empty": result_interval.is_empty,
        "lower": None if result_interval.is_empty else result_interval.lower,
        "upper": None if result_interval.is_empty else result_interval.upper,
    }
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(out_dir / "avp.json", payload)
    print(json.dumps(payload, sort_keys=True))
    return EXIT_OK


def cmd_benchmark(args) -> int:
    n_list = [int(v) for v in args.n_list.split(",") if v]
    rows = bench.run_benchmark(
        n_list,
        trials=args.trials,
        N=args.N,
        seed=args.seed,
        scheme=args.scheme or COLLOCATION,
        x_cap=args.x_cap if args.x_cap is not None else DEFAULT_X_CAP,
        jobs=args.jobs,
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    out_file = out_dir / "benchmark.csv"
    with open(out_file, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "m",
                "n",
                "N",
                "trials",
                "success_rate",
                "mean_time_per_point",
                "median_time_per_point",
                "total_lp_count",
            ]
        )
        for row in rows:
            writer.writerow(
                [
                    row.m,
                    row.n,
                    row.N,
                    row.trials,
                    _float_str(row.success_rate),
                    _float_str(row.mean_time_per_point),
                    _float_str(row.median_time_per_point),
                    row.total_lp_count,
                ]
            )
    print("wrote %s" % out_file)
    return EXIT_OK


def cmd_grid_study(args) -> int:
    doc = load_document(args.document)
    N_list = [int(v) for v in args.N_list.split(",") if v]
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    out_file = out_dir / "grid_study.csv"
    sdot0 = float(doc.get("sdot0", 0.0))
    sdotN = float(doc.get("sdotN", 0.0))
    with open(out_file, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scheme", "N", "duration", "max_abs_error", "max_rel_error"])
        for scheme in (COLLOCATION, INTERPOLATION):
            for N in N_list:
                path, constraints, problem = build_problem(
                    doc, N=N, scheme=scheme, x_cap=args.x_cap
                )
                report = topp_ra(problem, sdot0, sdotN)
                if not report.solved:
                    writer.writerow([scheme, N, "nan", "nan", "nan"])
                    continue
                max_abs, max_rel = constraint_satisfaction_error(
                    path, constraints, report.parameterization, problem.grid, args.dt
                )
                writer.writerow(
                    [
                        scheme,
                        N,
                        _float_str(duration(report.parameterization, problem.grid)),
                        _float_str(max_abs),
                        _float_str(max_rel),
                    ]
                )
    print("wrote %s" % out_file)
    return EXIT_OK


def cmd_verify(args) -> int:
    doc = load_document(args.document)
    _, _, problem = build_problem(doc, N=args.N, scheme=args.scheme, x_cap=args.x_cap)
    if problem.N > 200:
        raise DocumentError("invalid field at /N: verify expects a small grid (N <= 200)")
    sdot0 = float(doc.get("sdot0", 0.0))
    sdotN = float(doc.get("sdotN", 0.0))

    report = topp_ra(problem, sdot0, sdotN)
    ctrl = report.controllable
    if args.x_max is not None:
        x_max = args.x_max
    else:
        bounds = [iv.upper for iv in ctrl if not iv.is_empty]
        if not bounds:
            raise DocumentError("instance is infeasible; pass --x-max to verify anyway")
        x_max = max(max(bounds) * 1.1, sdot0**2, sdotN**2, 1e-6)
    config = DPConfig(state_grid_size=args.grid_states, x_max=x_max)

    masks = dp_controllable(problem, Interval.point(sdotN**2), config)
    states = config.grid()
    max_cells = 0.0
    for iv, mask in zip(ctrl, masks):
        if iv.is_empty != (not bool(np.any(mask))):
            max_cells = float("inf")
            break
        if iv.is_empty:
            continue
        marked = states[mask]
        max_cells = max(
            max_cells,
            abs(marked.min() - iv.lower) / config.cell,
            abs(marked.max() - iv.upper) / config.cell,
        )

    dp_cost = dp_optimal_cost(problem, sdot0**2, sdotN**2, config)
    solver_cost = (
        duration(report.parameterization, problem.grid) if report.solved else None
    )
    allowance = args.allowance_scale * (
        1.0 / config.state_grid_size + float(np.max(problem.grid.steps))
    )
    ok = max_cells <= 2.0
    if solver_cost is not None and np.isfinite(dp_cost):
        ok = ok and abs(solver_cost - dp_cost) <= allowance

    payload = {
        "max_endpoint_deviation_cells": max_cells,
        "solver_duration": solver_cost,
        "dp_duration": dp_cost if np.isfinite(dp_cost) else None,
        "allowance": allowance,
        "ok": ok,
    }
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(out_dir / "verify.json", payload)
    print(json.dumps(payload, sort_keys=True))
    return EXIT_OK if ok else 1


def _add_common(parser, with_scheme=True):
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--N", type=int, default=None, help="override grid segments")
    if with_scheme:
        parser.add_argument(
            "--scheme", choices=[COLLOCATION, INTERPOLATION], default=None
        )
    parser.add_argument("--x-cap", dest="x_cap", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="retime",
        description="Time-optimal path retiming by reachability analysis",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve a problem document")
    p_solve.add_argument("document")
    _add_common(p_solve)
    p_solve.add_argument("--dt", type=float, default=1e-3, help="trajectory sample step")
    p_solve.set_defaults(func=cmd_solve)

    p_avp = sub.add_parser("avp", help="propagate an admissible velocity interval")
    p_avp.add_argument("document")
    p_avp.add_argument(
        "--direction", choices=["forward", "backward"], default="forward"
    )
    _add_common(p_avp)
    p_avp.set_defaults(func=cmd_avp)

    p_bench = sub.add_parser("benchmark", help="random-instance timing benchmark")
    p_bench.add_argument("--n-list", default="4,8,16,32,64", help="comma-separated dof counts")
    p_bench.add_argument("--trials", type=int, default=10)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--jobs", type=int, default=1)
    _add_common(p_bench)
    p_bench.set_defaults(func=cmd_benchmark)

    p_grid = sub.add_parser("grid-study", help="grid-refinement error study")
    p_grid.add_argument("document")
    p_grid.add_argument("--N-list", default="100,200,400,800")
    p_grid.add_argument("--dt", type=float, default=1e-3)
    _add_common(p_grid, with_scheme=False)
    p_grid.set_defaults(func=cmd_grid_study)

    p_verify = sub.add_parser("verify", help="cross-check against the DP oracle")
    p_verify.add_argument("document")
    p_verify.add_argument("--grid-states", type=int, default=241)
    p_verify.add_argument("--x-max", dest="x_max", type=float, default=None)
    p_verify.add_argument("--allowance-scale", type=float, default=8.0)
    _add_common(p_verify)
    p_verify.set_defaults(func=cmd_verify)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DocumentError as exc:
        print("input error: %s" % exc, file=sys.stderr)
        return EXIT_INPUT_ERROR
    except ValueError as exc:
        print("input error: %s" % exc, file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
