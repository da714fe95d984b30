"""Curve primitive tests against independent geometric oracles."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fiberloom.bezier import (CubicBezier, QuadBezier, arclength_params,
                              construct_cubic, curvature,
                              isosceles_wedge_curve, max_curvature,
                              min_radius, offset_curve, polyline_curvature,
                              polyline_min_radius, scale_isosceles_for_radius,
                              select_bow_kind)
from fiberloom.errors import GeometryError


def circle_through(p1, p2, p3):
    """Circumcircle radius of three points (the classic chord construction)."""
    a = np.linalg.norm(p2 - p1)
    b = np.linalg.norm(p3 - p2)
    c = np.linalg.norm(p3 - p1)
    area = abs((p2 - p1)[0] * (p3 - p1)[1] - (p2 - p1)[1] * (p3 - p1)[0]) / 2
    return a * b * c / (4 * area)


def kappa_arc_cubic(radius, sweep):
    """Cubic approximating a circular arc via the standard tangent-handle
    construction; the independent oracle for curvature checks."""
    h = (4.0 / 3.0) * math.tan(sweep / 4.0) * radius
    a = np.array([radius, 0.0])
    b = radius * np.array([math.cos(sweep), math.sin(sweep)])
    ta = np.array([0.0, 1.0])
    tb = np.array([-math.sin(sweep), math.cos(sweep)])
    return CubicBezier(a, a + h * ta, b - h * tb, b)


class TestEvaluation:
    def test_quadratic_endpoints(self):
        q = QuadBezier(np.array([0.0, 0.0]), np.array([3.0, 1.0]),
                       np.array([5.0, -2.0]))
        assert np.allclose(q.point(0.0), [0, 0])
        assert np.allclose(q.point(1.0), [5, -2])

    def test_constant_cubic(self):
        p = np.array([2.0, 7.0])
        c = CubicBezier(p, p, p, p)
        t = np.linspace(0, 1, 11)
        assert np.allclose(c.point(t), p)
        assert np.allclose(c.deriv1(t), 0)
        assert np.allclose(c.deriv2(t), 0)

    def test_quadratic_second_derivative_symbolic(self):
        # 2 (W - 2U + V) for V=(0,0), U=(1,0), W=(1,1)
        q = QuadBezier(np.array([0.0, 0.0]), np.array([1.0, 0.0]),
                       np.array([1.0, 1.0]))
        assert np.allclose(q.deriv2(0.3), [-2.0, 2.0])
        assert np.allclose(q.deriv2(0.9), [-2.0, 2.0])

    def test_parameter_range_is_enforced(self):
        q = QuadBezier(np.array([0.0, 0.0]), np.array([1.0, 0.0]),
                       np.array([1.0, 1.0]))
        with pytest.raises(GeometryError):
            q.point(1.5)
        with pytest.raises(GeometryError):
            q.deriv1(np.array([0.2, -0.1]))


class TestCurvature:
    def test_straight_quadratic_has_zero_curvature(self):
        q = QuadBezier(np.array([0.0, 0.0]), np.array([1.0, 1.0]),
                       np.array([3.0, 3.0]))
        t = np.linspace(0, 1, 33)
        assert np.allclose(curvature(q, t), 0.0)
        assert min_radius(q) == math.inf

    def test_against_three_point_circle(self):
        q = QuadBezier(np.array([-1.0, 1.0]), np.array([0.0, 0.0]),
                       np.array([1.0, 1.0]))
        # exact values: kappa(0.5) = 1, the chord circle gives 1.0025
        # (the t offset of 0.05 contributes its O(h^2) discretization bias)
        assert abs(curvature(q, 0.5)) == pytest.approx(1.0, abs=1e-12)
        r_oracle = circle_through(q.point(0.45), q.point(0.5), q.point(0.55))
        assert r_oracle == pytest.approx(1.0025, abs=1e-12)
        assert abs(curvature(q, 0.5)) == pytest.approx(1.0 / r_oracle, rel=2.6e-3)

    def test_quarter_circle_cubic_curvature_band(self):
        # the tangent-handle arc cubic is positionally excellent but its
        # curvature wanders about 2.1% around 1/r over a quarter circle
        r = 7.0
        c = kappa_arc_cubic(r, math.pi / 2)
        k = np.abs(curvature(c, np.linspace(0, 1, 4001)))
        deviation = np.max(np.abs(k * r - 1.0))
        assert deviation == pytest.approx(0.02145, abs=5e-4)

    def test_short_arc_cubic_curvature_is_nearly_constant(self):
        r = 7.0
        c = kappa_arc_cubic(r, math.radians(30))
        k = np.abs(curvature(c, np.linspace(0, 1, 4001)))
        assert np.max(np.abs(k * r - 1.0)) < 5e-4

    def test_cusp_raises(self):
        # antiparallel legs fold the quadratic onto itself at t = 0.5
        q = QuadBezier(np.array([0.0, 0.0]), np.array([1.0, 0.0]),
                       np.array([0.0, 0.0]))
        with pytest.raises(GeometryError, match="cusp"):
            curvature(q, 0.5)


class TestMaxCurvature:
    def test_symmetric_quadratic_peaks_at_half(self):
        for angle_deg in (30, 45, 90, 120, 160):
            curve = isosceles_wedge_curve(math.radians(angle_deg), 5.0,
                                          "quadratic")
            t_star, _ = max_curvature(curve)
            assert abs(t_star - 0.5) < 1e-6

    def test_refinement_matches_dense_brute_force(self):
        rng = np.random.default_rng(7)
        checked = 0
        while checked < 20:
            pts = rng.uniform(0, 10, size=(4, 2))
            c = CubicBezier(*pts)
            t = np.linspace(0, 1, 1_000_001)
            d1 = c.deriv1(t)
            speed = np.hypot(d1[:, 0], d1[:, 1])
            if speed.min() < 1.0:  # skip near-cusp curves
                continue
            _, k_refined = max_curvature(c)
            k_brute = np.max(np.abs(curvature(c, t)))
            assert abs(k_refined - k_brute) <= 1e-9 * max(1.0, k_brute)
            assert k_refined >= k_brute - 1e-12
            checked += 1


class TestIsoscelesScaling:
    def test_rebuilt_curve_hits_the_radius(self):
        rng = np.random.default_rng(11)
        for _ in range(8):
            angle = math.radians(rng.uniform(25, 165))
            r = rng.uniform(4, 25)
            for kind in ("quadratic", "cubic"):
                leg = scale_isosceles_for_radius(angle, r, kind)
                rebuilt = min_radius(isosceles_wedge_curve(angle, leg, kind))
                assert rebuilt >= r
                assert rebuilt == pytest.approx(r, rel=1e-4)

    def test_acute_angle_prefers_cubic(self):
        angle = math.radians(45)
        quad = scale_isosceles_for_radius(angle, 10.0, "quadratic")
        cubic = scale_isosceles_for_radius(angle, 10.0, "cubic")
        assert quad > cubic
        assert select_bow_kind(angle) == "cubic"

    def test_near_straight_angle_prefers_quadratic(self):
        assert select_bow_kind(math.radians(170)) == "quadratic"

    def test_straight_limit_needs_no_length(self):
        assert scale_isosceles_for_radius(math.pi, 10.0, "quadratic") == 0.0

    def test_quadratic_leg_matches_closed_form(self):
        # kappa(0.5) = cos(a/2) / (L sin^2(a/2)) for the symmetric quadratic
        angle = math.radians(72)
        leg = scale_isosceles_for_radius(angle, 10.0, "quadratic")
        closed_form = 10.0 * math.cos(angle / 2) / math.sin(angle / 2) ** 2
        assert leg == pytest.approx(closed_form, rel=1e-6)


class TestConstructCubic:
    def test_isosceles_is_symmetric(self):
        v = np.array([-3.0, 4.0])
        u = np.array([0.0, 0.0])
        w = np.array([3.0, 4.0])
        curve, c_s, c_t = construct_cubic(v, u, w)
        assert c_s == pytest.approx(c_t, abs=1e-6)
        # mirror symmetry of the curve across the bisector
        t = np.linspace(0, 1, 101)
        pts = curve.point(t)
        mirrored = pts[::-1] * np.array([-1.0, 1.0])
        assert np.allclose(pts, mirrored, atol=1e-9)

    def test_45_degree_wedge_is_nearly_an_arc(self):
        angle = math.radians(45)
        curve = isosceles_wedge_curve(angle, 1.0, "cubic")
        k_opt = max_curvature(curve)[1]
        k_arc = 1.0 / math.tan(angle / 2)  # arc through the same tangent points
        excess = (k_opt - k_arc) / k_arc
        assert 0.02 < excess < 0.035  # frozen: about 2.9% above the arc

    def test_degenerate_inner_points_are_worse(self):
        v = np.array([-math.sin(0.4), math.cos(0.4)])
        u = np.zeros(2)
        w = np.array([math.sin(0.4), math.cos(0.4)])
        curve, _, _ = construct_cubic(v, u, w)
        degen = CubicBezier(v, u, u, w)
        assert max_curvature(degen)[1] > max_curvature(curve)[1]

    def test_collinear_is_rejected(self):
        with pytest.raises(GeometryError, match="straight"):
            construct_cubic(np.array([0.0, 0.0]), np.array([1.0, 0.0]),
                            np.array([2.0, 0.0]))

    def test_matches_dense_grid_search(self):
        # asymmetric wedge: legs 1 and 1.7 at 65 degrees
        angle = math.radians(65)
        ratio = 1.7
        v_dir = np.array([-math.sin(angle / 2), math.cos(angle / 2)])
        w_dir = np.array([math.sin(angle / 2), math.cos(angle / 2)])
        u = np.zeros(2)
        v = v_dir
        w = ratio * w_dir
        _, c_s, c_t = construct_cubic(v, u, w)

        t = np.linspace(0, 1, 513)[None, :, None]
        grid_s = np.linspace(1e-3, 0.999, 200)
        grid_t = np.linspace(1e-3, 0.999 * ratio, 200)
        best = (np.inf, None, None)
        for cs in grid_s:
            S = u + cs * v_dir
            T = u[None, :] + grid_t[:, None] * w_dir
            d1 = (3 * (1 - t) ** 2 * (S - v)
                  + 6 * (1 - t) * t * (T[:, None, :] - S)
                  + 3 * t ** 2 * (w - T[:, None, :]))
            d2 = (6 * (1 - t) * (T[:, None, :] - 2 * S + v)
                  + 6 * t * (w - 2 * T[:, None, :] + S))
            num = d1[..., 0] * d2[..., 1] - d1[..., 1] * d2[..., 0]
            den = (d1[..., 0] ** 2 + d1[..., 1] ** 2) ** 1.5
            kmax = np.max(np.abs(num / den), axis=1)
            j = int(np.argmin(kmax))
            if kmax[j] < best[0]:
                best = (kmax[j], cs, grid_t[j])
        # the minimax valley runs diagonally and is flat compared to the
        # grid resolution, so the grid argmin wanders a few steps along
        # it; the meaningful agreement is in the achieved objective
        curve, _, _ = construct_cubic(v, u, w)
        assert max_curvature(curve)[1] <= best[0] * (1 + 1e-3)
        assert c_s == pytest.approx(best[1], abs=0.03)
        assert c_t == pytest.approx(best[2], abs=0.03)


class TestOffsets:
    def test_zero_offset_lies_on_the_curve(self):
        c = kappa_arc_cubic(10.0, math.pi / 2)
        off = offset_curve(c, 0.0, samples=64)
        t = arclength_params(c, 64)
        assert np.allclose(off.points, c.point(t))

    def test_offset_distance_against_nearest_point_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(5):
            sweep = rng.uniform(0.5, 1.4)
            c = kappa_arc_cubic(rng.uniform(5, 20), sweep)
            dense = c.point(np.linspace(0, 1, 4000))
            for d in (1.0, -2.0, 3.5):
                off = offset_curve(c, d, samples=48)
                for p in off.points:
                    nearest = np.min(np.hypot(*(dense - p).T))
                    assert nearest == pytest.approx(abs(d), abs=1e-3 * abs(d))

    def test_inward_offset_shifts_the_minimum_radius(self):
        r = 20.0
        curve = isosceles_wedge_curve(
            math.pi / 2, scale_isosceles_for_radius(math.pi / 2, r, "cubic"),
            "cubic")
        k_sign = curvature(curve, 0.5)
        inward = math.copysign(5.0, k_sign)
        off = offset_curve(curve, inward, samples=512)
        assert polyline_min_radius(off.points) == pytest.approx(r - 5.0, rel=0.02)

    def test_offset_past_center_of_curvature_is_rejected(self):
        r = 20.0
        curve = isosceles_wedge_curve(
            math.pi / 2, scale_isosceles_for_radius(math.pi / 2, r, "cubic"),
            "cubic")
        inward = math.copysign(25.0, curvature(curve, 0.5))
        with pytest.raises(GeometryError, match="center of curvature"):
            offset_curve(curve, inward)


class TestPolylineCurvature:
    def test_circle_points(self):
        t = np.linspace(0, 2 * math.pi, 200)
        pts = 10.0 * np.column_stack([np.cos(t), np.sin(t)])
        k = polyline_curvature(pts)
        assert np.allclose(np.abs(k), 0.1, atol=1e-6)

    def test_collinear_points_are_flat(self):
        pts = np.column_stack([np.linspace(0, 5, 20), np.zeros(20)])
        assert np.allclose(polyline_curvature(pts), 0.0)

    def test_matches_analytic_curvature_of_a_sampled_cubic(self):
        curve = isosceles_wedge_curve(math.pi / 2, 25.0, "cubic")
        t = arclength_params(curve, 256)
        pts = curve.point(t)
        analytic = curvature(curve, t)[1:-1]
        assert np.allclose(polyline_curvature(pts), analytic,
                           atol=0.01 * np.max(np.abs(analytic)))

    def test_duplicate_points_raise(self):
        pts = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]])
        with pytest.raises(GeometryError, match="duplicate"):
            polyline_curvature(pts)


points = st.tuples(st.floats(-50, 50), st.floats(-50, 50))


@settings(max_examples=40, deadline=None)
@given(ps=st.tuples(points, points, points, points),
       angle=st.floats(-math.pi, math.pi),
       scale=st.floats(0.1, 20),
       shift=points)
def test_affine_invariance_of_evaluation(ps, angle, scale, shift):
    controls = [np.array(p) for p in ps]
    rot = scale * np.array([[math.cos(angle), -math.sin(angle)],
                            [math.sin(angle), math.cos(angle)]])
    b = np.array(shift)
    curve = CubicBezier(*controls)
    moved = CubicBezier(*[rot @ p + b for p in controls])
    t = np.linspace(0, 1, 17)
    expected = curve.point(t) @ rot.T + b
    assert np.allclose(moved.point(t), expected, atol=1e-9)


@settings(max_examples=25, deadline=None)
@given(lam=st.floats(0.05, 50))
def test_curvature_scales_inversely_with_size(lam):
    base = CubicBezier(np.array([0.0, 0.0]), np.array([1.0, 2.0]),
                       np.array([3.0, 2.5]), np.array([4.0, 0.0]))
    scaled = CubicBezier(*[lam * p for p in base.controls()])
    t = np.linspace(0.05, 0.95, 13)
    assert np.allclose(curvature(scaled, t) * lam, curvature(base, t),
                       rtol=1e-9, atol=1e-12)
