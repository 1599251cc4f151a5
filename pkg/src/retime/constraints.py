"""Second- and first-order constraint models and their path projection.

All constraints are lazy suppliers evaluated per path position, so the same
constraint object works with any grid.  Constraint objects are immutable
after construction; evaluation at distinct positions may run concurrently.

Canonical rows have the componentwise meaning

    a(s) * u + b(s) * x + c(s) <= 0

over the path acceleration u and the squared path velocity x.  Slack
constraints keep a polytope of auxiliary quantities (torques, contact
forces) unprojected:

    a(s) u + b(s) x + c(s) = H w,   F w <= g

with H = identity when omitted.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from .path import GeometricPath

__all__ = [
    "CanonicalLinearConstraint",
    "PolytopeSlackConstraint",
    "FirstOrderBound",
    "SlackBlock",
    "project_second_order",
    "joint_acceleration_bounds",
    "joint_velocity_bounds",
]

ZERO_TANGENT_TOL = 1e-12
DEFAULT_VELOCITY_CAP = 1e8


@dataclass(frozen=True)
class SlackBlock:
    """One stage's slack constraint data: a u + b x + c = H w, F w <= g."""

    a: np.ndarray  # (d,)
    b: np.ndarray  # (d,)
    c: np.ndarray  # (d,)
    F: np.ndarray  # (p, k)
    g: np.ndarray  # (p,)
    H: Optional[np.ndarray] = None  # (d, k); None means identity, k = d

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        c = np.atleast_1d(np.asarray(self.c, dtype=float))
        F = np.atleast_2d(np.asarray(self.F, dtype=float))
        g = np.atleast_1d(np.asarray(self.g, dtype=float))
        H = self.H
        if H is not None:
            H = np.atleast_2d(np.asarray(H, dtype=float))
        d = a.size
        if b.size != d or c.size != d:
            raise ValueError("a, b, c must have equal length")
        k = F.shape[1]
        if g.size != F.shape[0]:
            raise ValueError("g length %d does not match F rows %d" % (g.size, F.shape[0]))
        if H is None:
            if k != d:
                raise ValueError(
                    "F has %d columns but the physical dimension is %d "
                    "(provide H for non-square couplings)" % (k, d)
                )
        elif H.shape != (d, k):
            raise ValueError("H must have shape (%d, %d), got %s" % (d, k, H.shape))
        for name, arr in (("a", a), ("b", b), ("c", c), ("F", F), ("g", g)):
            if not np.all(np.isfinite(arr)):
                raise ValueError("slack block entry %s is not finite" % name)
        if H is not None and not np.all(np.isfinite(H)):
            raise ValueError("slack block entry H is not finite")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "H", H)

    @property
    def slack_dim(self) -> int:
        return self.F.shape[1]


class CanonicalLinearConstraint:
    """Rows a(s) u + b(s) x + c(s) <= 0 produced by a per-position supplier.

    An optional batch supplier maps an array of positions to row arrays of
    shape (len(s), m); continuous-time error measurement uses it when
    present to avoid per-sample Python overhead.
    """

    def __init__(
        self,
        row_supplier: Callable[[float], Tuple[np.ndarray, np.ndarray, np.ndarray]],
        name: str = "canonical",
        batch_supplier: Optional[Callable[[np.ndarray], Tuple]] = None,
    ):
        self._supplier = row_supplier
        self._batch = batch_supplier
        self.name = name

    def rows(self, s: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        a, b, c = self._supplier(float(s))
        a = np.atleast_1d(np.asarray(a, dtype=float))
        b = np.atleast_1d(np.asarray(b, dtype=float))
        c = np.atleast_1d(np.asarray(c, dtype=float))
        if not (a.size == b.size == c.size):
            raise ValueError("constraint %r returned mismatched row vectors" % self.name)
        for arr in (a, b, c):
            if not np.all(np.isfinite(arr)):
                raise ValueError("constraint %r returned non-finite rows at s=%r" % (self.name, s))
        return a, b, c

    def rows_batch(self, s_values: np.ndarray):
        """(len(s), m) row arrays, via the batch supplier or a scalar loop."""
        if self._batch is not None:
            return self._batch(np.asarray(s_values, dtype=float))
        stacked = [self.rows(float(s)) for s in s_values]
        return (
            np.vstack([t[0] for t in stacked]),
            np.vstack([t[1] for t in stacked]),
            np.vstack([t[2] for t in stacked]),
        )


class PolytopeSlackConstraint:
    """Slack-variable constraint supplied as a per-position SlackBlock."""

    def __init__(self, supplier: Callable[[float], SlackBlock], name: str = "slack"):
        self._supplier = supplier
        self.name = name

    def block(self, s: float) -> SlackBlock:
        blk = self._supplier(float(s))
        if not isinstance(blk, SlackBlock):
            blk = SlackBlock(*blk)
        return blk


class FirstOrderBound:
    """Upper bound on the squared path velocity: x <= x_upper(s)."""

    def __init__(
        self,
        x_upper: Callable[[float], float],
        name: str = "velocity",
        batch_supplier: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    ):
        self._x_upper = x_upper
        self._batch = batch_supplier
        self.name = name

    def x_upper(self, s: float) -> float:
        v = float(self._x_upper(float(s)))
        if v < 0:
            raise ValueError("constraint %r returned negative bound at s=%r" % (self.name, s))
        return v

    def x_upper_batch(self, s_values: np.ndarray) -> np.ndarray:
        if self._batch is not None:
            return np.asarray(self._batch(np.asarray(s_values, dtype=float)), dtype=float)
        return np.array([self.x_upper(float(s)) for s in s_values])


def project_second_order(A, B, f, Cpoly, qp, qpp):
    """Project generalized second-order constraint data onto the path.

    Given A(q) qdd + qd^T B(q) qd + f(q) in the polytope {v : F v <= g},
    and the path derivatives qp = q'(s), qpp = q''(s), returns the stage
    data (a, b, c, F, g) with

        a = A qp,   b = A qpp + qp^T B qp,   c = f.

    The polytope description passes through unchanged.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    f = np.atleast_1d(np.asarray(f, dtype=float))
    qp = np.atleast_1d(np.asarray(qp, dtype=float))
    qpp = np.atleast_1d(np.asarray(qpp, dtype=float))
    m, n = A.shape
    if qp.size != n or qpp.size != n:
        raise ValueError("path derivatives must have length %d" % n)
    if f.size != m:
        raise ValueError("f must have length %d" % m)
    B = np.asarray(B, dtype=float)
    if B.ndim == 0:
        B = np.full((n, m, n), float(B)) if n == m == 1 else None
        if B is None:
            raise ValueError("scalar B only valid for 1x1 systems")
    if B.shape != (n, m, n):
        raise ValueError("B must have shape (%d, %d, %d), got %s" % (n, m, n, B.shape))
    a = A @ qp
    b = A @ qpp + np.einsum("i,ikj,j->k", qp, B, qp)
    c = f.copy()
    F, g = Cpoly
    return a, b, c, F, g


def joint_acceleration_bounds(
    path: GeometricPath, lo, hi
) -> CanonicalLinearConstraint:
    """Componentwise bounds lo <= qdd <= hi projected onto the path.

    Produces 2n rows per position: for each joint j, an upper row
    (q'_j, q''_j, -hi_j) followed by a lower row (-q'_j, -q''_j, lo_j).
    """
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    if lo.size != path.dof or hi.size != path.dof:
        raise ValueError("bounds must have length %d" % path.dof)
    if np.any(lo >= hi):
        j = int(np.argmax(lo >= hi))
        raise ValueError("lower bound %r >= upper bound %r for joint %d" % (lo[j], hi[j], j))

    def supplier(s: float):
        qp = path.eval(s, 1)
        qpp = path.eval(s, 2)
        a = np.concatenate([qp, -qp])
        b = np.concatenate([qpp, -qpp])
        c = np.concatenate([-hi, lo])
        return a, b, c

    def batch(s_values: np.ndarray):
        qp = path.eval(s_values, 1)
        qpp = path.eval(s_values, 2)
        a = np.hstack([qp, -qp])
        b = np.hstack([qpp, -qpp])
        c = np.tile(np.concatenate([-hi, lo]), (s_values.size, 1))
        return a, b, c

    return CanonicalLinearConstraint(supplier, name="joint_acceleration", batch_supplier=batch)


def joint_velocity_bounds(
    path: GeometricPath, vmax, cap: float = DEFAULT_VELOCITY_CAP
) -> FirstOrderBound:
    """Symmetric joint velocity bounds |qd_j| <= vmax_j reduced to x <= x_upper(s).

    x_upper(s) = min_j (vmax_j / |q'_j(s)|)^2 over joints with a
    non-vanishing tangent; `cap` when all tangents vanish.
    """
    vmax = np.atleast_1d(np.asarray(vmax, dtype=float))
    if vmax.size != path.dof:
        raise ValueError("vmax must have length %d" % path.dof)
    if np.any(vmax <= 0):
        raise ValueError("vmax must be positive")

    def x_upper(s: float) -> float:
        qp = np.abs(path.eval(s, 1))
        mask = qp > ZERO_TANGENT_TOL
        if not np.any(mask):
            return float(cap)
        ratios = vmax[mask] / qp[mask]
        return float(min(np.min(ratios) ** 2, cap))

    def batch(s_values: np.ndarray) -> np.ndarray:
        qp = np.abs(path.eval(s_values, 1))
        with np.errstate(divide="ignore"):
            ratios = np.where(qp > ZERO_TANGENT_TOL, vmax[None, :] / qp, np.inf)
        return np.minimum(np.min(ratios, axis=1) ** 2, cap)

    return FirstOrderBound(x_upper, name="joint_velocity", batch_supplier=batch)
