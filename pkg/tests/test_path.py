import numpy as np
import pytest

from retime.path import GeometricPath, spline_from_waypoints


def test_two_point_line():
    path = spline_from_waypoints([(0.0, [0.0]), (1.0, [2.0])])
    assert np.allclose(path.eval(0.5, 0), [1.0])
    assert np.allclose(path.eval(0.5, 1), [2.0])
    assert np.allclose(path.eval(0.5, 2), [0.0], atol=1e-12)


def test_three_point_natural_spline_hand_solved():
    # Natural spline through (0,0), (1,1), (2,0), h = 1.  Second-derivative
    # unknowns: M0 = M2 = 0 (natural), interior equation
    #   (h/6) M0 + (2h/3) M1 + (h/6) M2 = (y2-y1)/h - (y1-y0)/h = -2
    # gives M1 = -3.  On [0,1] the piece with S(0)=0, S''(0)=0, S(1)=1,
    # S''(1)=-3 is S(s) = 1.5 s - 0.5 s^3, so S'(0) = 1.5, S'(1) = 0,
    # S''(1) = -3, S(0.5) = 0.6875.
    path = spline_from_waypoints([(0.0, [0.0]), (1.0, [1.0]), (2.0, [0.0])])
    assert np.allclose(path.eval(0.0, 1), [1.5], atol=1e-12)
    assert np.allclose(path.eval(1.0, 1), [0.0], atol=1e-12)
    assert np.allclose(path.eval(1.0, 2), [-3.0], atol=1e-12)
    assert np.allclose(path.eval(0.5, 0), [0.6875], atol=1e-12)
    assert np.allclose(path.eval(2.0, 1), [-1.5], atol=1e-12)


def test_per_joint_independence():
    path = spline_from_waypoints([(0.0, [0.0, 0.0]), (1.0, [1.0, -1.0])])
    for s in (0.0, 0.3, 0.7, 1.0):
        assert np.allclose(path.eval(s, 0), [s, -s], atol=1e-12)
        assert np.allclose(path.eval(s, 1), [1.0, -1.0], atol=1e-12)


def test_linear_path_zero_curvature():
    path = spline_from_waypoints([(0.0, [0.0]), (1.0, [3.0])])
    assert np.allclose(path.eval(0.4, 2), [0.0], atol=1e-12)


def test_interpolation_property():
    rng = np.random.default_rng(5)
    s_vals = np.array([0.0, 0.25, 0.5, 0.75, 1.0])
    for _ in range(5):
        pts = rng.uniform(-1, 1, (5, 3))
        path = spline_from_waypoints(list(zip(s_vals, pts)))
        for s, q in zip(s_vals, pts):
            assert np.max(np.abs(path.eval(s, 0) - q)) <= 1e-9


def test_finite_difference_consistency():
    rng = np.random.default_rng(11)
    pts = rng.uniform(-1, 1, (5, 4))
    path = spline_from_waypoints(
        list(zip([0.0, 0.25, 0.5, 0.75, 1.0], pts))
    )
    h = 1e-5
    samples = rng.uniform(0.02, 0.98, 100)
    # keep away from the knots
    samples = samples[np.min(np.abs(samples[:, None] - np.array([0.25, 0.5, 0.75])), axis=1) > 1e-3]
    for s in samples:
        fd1 = (path.eval(s + h, 0) - path.eval(s - h, 0)) / (2 * h)
        assert np.max(np.abs(fd1 - path.eval(s, 1))) <= 1e-4
        fd2 = (path.eval(s + h, 1) - path.eval(s - h, 1)) / (2 * h)
        assert np.max(np.abs(fd2 - path.eval(s, 2))) <= 1e-3


def test_natural_end_conditions():
    rng = np.random.default_rng(3)
    pts = rng.uniform(-1, 1, (5, 6))
    path = spline_from_waypoints(list(zip([0.0, 0.3, 0.5, 0.8, 1.2], pts)))
    assert np.max(np.abs(path.eval(0.0, 2))) <= 1e-8
    assert np.max(np.abs(path.eval(path.s_end, 2))) <= 1e-8


def test_continuity_at_knots():
    rng = np.random.default_rng(7)
    pts = rng.uniform(-1, 1, (5, 3))
    path = spline_from_waypoints(list(zip([0.0, 0.25, 0.5, 0.75, 1.0], pts)))
    eps = 1e-10
    for knot in (0.25, 0.5, 0.75):
        for order, tol in ((0, 1e-9), (1, 1e-9), (2, 1e-8)):
            left = path.eval(knot - eps, order)
            right = path.eval(knot + eps, order)
            assert np.max(np.abs(left - right)) <= tol


def test_domain_shift():
    path = spline_from_waypoints([(2.0, [1.0]), (3.0, [2.0])])
    assert path.s_end == pytest.approx(1.0)
    assert np.allclose(path.eval(0.0, 0), [1.0])


def test_construction_errors():
    with pytest.raises(ValueError, match="two waypoints"):
        spline_from_waypoints([(0.0, [1.0])])
    with pytest.raises(ValueError, match="increasing"):
        spline_from_waypoints([(0.0, [0.0]), (0.0, [1.0])])
    with pytest.raises(ValueError, match="dimension"):
        spline_from_waypoints([(0.0, [0.0]), (1.0, [1.0, 2.0])])


def test_eval_domain_errors():
    path = spline_from_waypoints([(0.0, [0.0]), (1.0, [1.0])])
    with pytest.raises(ValueError, match="outside domain"):
        path.eval(1.1, 0)
    with pytest.raises(ValueError, match="outside domain"):
        path.eval(-0.1, 0)
    # endpoint tolerance
    path.eval(1.0 + 5e-13, 0)
    path.eval(-5e-13, 0)
    with pytest.raises(ValueError, match="order"):
        path.eval(0.5, 3)


def test_breakpoint_side_convention():
    # Two pieces with a deliberate C2 jump: the knot evaluates on the
    # right piece; the domain end evaluates on the last piece.
    breaks = [0.0, 1.0, 2.0]
    coeffs = np.zeros((2, 1, 4))
    coeffs[0, 0] = [0.0, 0.0, 1.0, 0.0]  # q = s on [0, 1]
    coeffs[1, 0] = [0.0, 1.0, 1.0, 1.0]  # q = (s-1)^2 + (s-1) + 1 on [1, 2]
    path = GeometricPath(np.array(breaks), coeffs)
    assert path.eval(1.0, 2) == pytest.approx(2.0)  # right piece curvature
    assert path.eval(2.0, 1) == pytest.approx(3.0)  # last piece at the end


def test_direct_construction_errors():
    with pytest.raises(ValueError, match="increasing"):
        GeometricPath(np.array([0.0, 0.0, 1.0]), np.zeros((2, 1, 4)))
    with pytest.raises(ValueError, match="segment count"):
        GeometricPath(np.array([0.0, 1.0]), np.zeros((2, 1, 4)))
    with pytest.raises(ValueError, match="finite"):
        GeometricPath(np.array([0.0, 1.0]), np.full((1, 1, 4), np.nan))
    with pytest.raises(ValueError, match="start at 0"):
        GeometricPath(np.array([0.5, 1.0]), np.zeros((1, 1, 4)))


def test_vectorized_eval_matches_scalar():
    rng = np.random.default_rng(13)
    pts = rng.uniform(-1, 1, (5, 2))
    path = spline_from_waypoints(list(zip([0.0, 0.25, 0.5, 0.75, 1.0], pts)))
    s = rng.uniform(0, 1, 50)
    batch = path.eval(s, 1)
    for k in range(s.size):
        assert np.allclose(batch[k], path.eval(s[k], 1), atol=0)
