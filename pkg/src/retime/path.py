"""Piecewise-polynomial geometric paths q(s) with first and second derivatives.

A path maps the scalar parameter s in [0, s_end] to a joint configuration.
Paths are immutable after construction; evaluation is safe to call
concurrently.
"""

from __future__ import annotations

from typing import Sequence, Tuple

import numpy as np
from scipy.interpolate import CubicSpline

__all__ = ["GeometricPath", "spline_from_waypoints"]

_ENDPOINT_TOL = 1e-12


class GeometricPath:
    """A piecewise-cubic map s -> q(s) for an n-dof system.

    Parameters
    ----------
    breakpoints:
        Strictly increasing knots s_0 = 0 < ... < s_K = s_end.
    coefficients:
        Array of shape (K, n, 4): per segment and per joint, cubic
        coefficients [c3, c2, c1, c0] in the local variable (s - s_k).

    Interior breakpoints evaluate on the right-hand piece; s_end evaluates
    on the last piece.
    """

    def __init__(self, breakpoints: np.ndarray, coefficients: np.ndarray):
        breakpoints = np.asarray(breakpoints, dtype=float)
        coefficients = np.asarray(coefficients, dtype=float)
        if breakpoints.ndim != 1 or breakpoints.size < 2:
            raise ValueError("need at least two breakpoints")
        if np.any(np.diff(breakpoints) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if abs(breakpoints[0]) > _ENDPOINT_TOL:
            raise ValueError("path domain must start at 0")
        if coefficients.ndim != 3 or coefficients.shape[2] != 4:
            raise ValueError(
                "coefficients must have shape (segments, dof, 4), got %s"
                % (coefficients.shape,)
            )
        if coefficients.shape[0] != breakpoints.size - 1:
            raise ValueError(
                "segment count %d does not match breakpoint count %d"
                % (coefficients.shape[0], breakpoints.size)
            )
        if not np.all(np.isfinite(coefficients)):
            raise ValueError("coefficients must be finite")
        self._breaks = breakpoints
        self._coeffs = coefficients
        self._breaks.setflags(write=False)
        self._coeffs.setflags(write=False)

    @property
    def dof(self) -> int:
        return self._coeffs.shape[1]

    @property
    def s_end(self) -> float:
        return float(self._breaks[-1])

    @property
    def breakpoints(self) -> np.ndarray:
        return self._breaks

    @property
    def coefficients(self) -> np.ndarray:
        return self._coeffs

    def _segment_index(self, s: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self._breaks, s, side="right") - 1
        return np.clip(idx, 0, self._coeffs.shape[0] - 1)

    def eval(self, s, order: int = 0) -> np.ndarray:
        """Evaluate q, q' or q'' at s.

        s may be a scalar (returns shape (dof,)) or a 1-d array
        (returns shape (len(s), dof)).
        """
        if order not in (0, 1, 2):
            raise ValueError("order must be 0, 1 or 2")
        scalar = np.isscalar(s) or np.ndim(s) == 0
        s_arr = np.atleast_1d(np.asarray(s, dtype=float))
        lo, hi = 0.0, self.s_end
        if np.any(s_arr < lo - _ENDPOINT_TOL) or np.any(s_arr > hi + _ENDPOINT_TOL):
            bad = s_arr[(s_arr < lo - _ENDPOINT_TOL) | (s_arr > hi + _ENDPOINT_TOL)]
            raise ValueError(
                "path parameter %r outside domain [0, %r]" % (float(bad[0]), hi)
            )
        s_arr = np.clip(s_arr, lo, hi)
        idx = self._segment_index(s_arr)
        t = s_arr - self._breaks[idx]
        c3 = self._coeffs[idx, :, 0]
        c2 = self._coeffs[idx, :, 1]
        c1 = self._coeffs[idx, :, 2]
        c0 = self._coeffs[idx, :, 3]
        t = t[:, None]
        if order == 0:
            out = ((c3 * t + c2) * t + c1) * t + c0
        elif order == 1:
            out = (3.0 * c3 * t + 2.0 * c2) * t + c1
        else:
            out = 6.0 * c3 * t + 2.0 * c2
        return out[0] if scalar else out

    def __call__(self, s, order: int = 0) -> np.ndarray:
        return self.eval(s, order)


def spline_from_waypoints(
    waypoints: Sequence[Tuple[float, Sequence[float]]],
) -> GeometricPath:
    """Natural cubic spline through (s, q) waypoints.

    Second derivatives vanish at both endpoints.  The domain is shifted so
    it starts at 0.
    """
    if len(waypoints) < 2:
        raise ValueError("need at least two waypoints")
    s_vals = np.asarray([float(w[0]) for w in waypoints], dtype=float)
    if np.any(np.diff(s_vals) <= 0):
        raise ValueError("waypoint s values must be strictly increasing")
    qs = [np.atleast_1d(np.asarray(w[1], dtype=float)) for w in waypoints]
    dof = qs[0].size
    for k, q in enumerate(qs):
        if q.ndim != 1 or q.size != dof:
            raise ValueError(
                "waypoint %d has dimension %d, expected %d" % (k, q.size, dof)
            )
    q_arr = np.vstack(qs)
    s_shifted = s_vals - s_vals[0]
    spline = CubicSpline(s_shifted, q_arr, axis=0, bc_type="natural")
    # CubicSpline.c has shape (4, segments, dof), highest degree first.
    coeffs = np.moveaxis(spline.c, 0, 2)
    return GeometricPath(s_shifted, coeffs)
