"""Quadratic and cubic Bezier primitives: evaluation, curvature,
minimum-radius constructions and offset polylines.

Offsets are discretized: points are pushed along the unit left normal of
the reference curve at arclength-uniform parameters, because exact
parallel Bezier curves do not exist in general.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np

from .errors import GeometryError

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

# sample counts for curvature scans and offset discretization
CURVATURE_SCAN = 512
OFFSET_SAMPLES = 128

# prefer the simpler quadratic when its required leg length is within
# this relative margin of the optimal cubic's (near-straight wedges)
QUADRATIC_PREFERENCE = 0.02

_T_EPS = 1e-12


def _check_t(t: np.ndarray) -> None:
    if t.size and (t.min() < -_T_EPS or t.max() > 1.0 + _T_EPS):
        raise GeometryError(f"curve parameter outside [0, 1]: {t.min()}..{t.max()}")


def _shape(points: np.ndarray, scalar: bool) -> np.ndarray:
    return points[0] if scalar else points


@dataclass(frozen=True, eq=False)
class QuadBezier:
    v: np.ndarray
    u: np.ndarray
    w: np.ndarray

    def controls(self) -> np.ndarray:
        return np.array([self.v, self.u, self.w], dtype=float)

    def point(self, t):
        scalar = np.isscalar(t)
        t = np.atleast_1d(np.asarray(t, dtype=float))[:, None]
        _check_t(t)
        p = (1 - t) ** 2 * self.v + 2 * (1 - t) * t * self.u + t ** 2 * self.w
        return _shape(p, scalar)

    def deriv1(self, t):
        scalar = np.isscalar(t)
        t = np.atleast_1d(np.asarray(t, dtype=float))[:, None]
        _check_t(t)
        d = 2 * (1 - t) * (self.u - self.v) + 2 * t * (self.w - self.u)
        return _shape(d, scalar)

    def deriv2(self, t):
        scalar = np.isscalar(t)
        t = np.atleast_1d(np.asarray(t, dtype=float))[:, None]
        _check_t(t)
        d = np.broadcast_to(2 * (self.w - 2 * self.u + self.v), (t.shape[0], 2))
        return _shape(np.array(d, dtype=float), scalar)


@dataclass(frozen=True, eq=False)
class CubicBezier:
    v: np.ndarray
    s: np.ndarray
    t: np.ndarray
    w: np.ndarray

    def controls(self) -> np.ndarray:
        return np.array([self.v, self.s, self.t, self.w], dtype=float)

    def point(self, t):
        scalar = np.isscalar(t)
        t = np.atleast_1d(np.asarray(t, dtype=float))[:, None]
        _check_t(t)
        p = ((1 - t) ** 3 * self.v + 3 * (1 - t) ** 2 * t * self.s
             + 3 * (1 - t) * t ** 2 * self.t + t ** 3 * self.w)
        return _shape(p, scalar)

    def deriv1(self, t):
        scalar = np.isscalar(t)
        t = np.atleast_1d(np.asarray(t, dtype=float))[:, None]
        _check_t(t)
        d = (3 * (1 - t) ** 2 * (self.s - self.v)
             + 6 * (1 - t) * t * (self.t - self.s)
             + 3 * t ** 2 * (self.w - self.t))
        return _shape(d, scalar)

    def deriv2(self, t):
        scalar = np.isscalar(t)
        t = np.atleast_1d(np.asarray(t, dtype=float))[:, None]
        _check_t(t)
        d = (6 * (1 - t) * (self.t - 2 * self.s + self.v)
             + 6 * t * (self.w - 2 * self.t + self.s))
        return _shape(d, scalar)


Curve = QuadBezier | CubicBezier


@dataclass(frozen=True, eq=False)
class OffsetPolyline:
    points: np.ndarray  # (n, 2)
    offset_distance: float
    source: str = ""


def _size_scale(curve: Curve) -> float:
    c = curve.controls()
    return float(np.max(np.ptp(c, axis=0))) or 1.0


def curvature(curve: Curve, t):
    """Signed curvature; positive turns left.  Raises on a vanishing
    first derivative (cusp)."""
    scalar = np.isscalar(t)
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    d1 = np.atleast_2d(curve.deriv1(tt))
    d2 = np.atleast_2d(curve.deriv2(tt))
    speed2 = d1[:, 0] ** 2 + d1[:, 1] ** 2
    floor = (1e-9 * _size_scale(curve)) ** 2
    if np.any(speed2 < floor):
        raise GeometryError("vanishing first derivative (cusp) in curvature")
    k = (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]) / speed2 ** 1.5
    return float(k[0]) if scalar else k


def _golden_max(f, lo: float, hi: float, tol: float = 1e-9) -> tuple[float, float]:
    """Golden-section maximization of a unimodal-enough scalar function."""
    a, b = lo, hi
    m1 = b - GOLDEN * (b - a)
    m2 = a + GOLDEN * (b - a)
    f1, f2 = f(m1), f(m2)
    while b - a > tol:
        if f1 > f2:
            b, m2, f2 = m2, m1, f1
            m1 = b - GOLDEN * (b - a)
            f1 = f(m1)
        else:
            a, m1, f1 = m1, m2, f2
            m2 = a + GOLDEN * (b - a)
            f2 = f(m2)
    t = 0.5 * (a + b)
    return t, f(t)


def sampled_max_curvature(curve: Curve, samples: int = CURVATURE_SCAN) -> tuple[float, float]:
    t = np.linspace(0.0, 1.0, samples)
    k = np.abs(curvature(curve, t))
    i = int(np.argmax(k))
    return float(t[i]), float(k[i])


def max_curvature(curve: Curve, samples: int = CURVATURE_SCAN) -> tuple[float, float]:
    """(t*, max |curvature|) by dense scan plus golden-section refinement."""
    t = np.linspace(0.0, 1.0, samples)
    k = np.abs(curvature(curve, t))
    i = int(np.argmax(k))
    if k[i] == 0.0:
        return float(t[i]), 0.0
    lo = t[max(i - 1, 0)]
    hi = t[min(i + 1, samples - 1)]
    t_star, k_star = _golden_max(lambda x: abs(curvature(curve, float(x))), lo, hi)
    if k[i] > k_star:
        return float(t[i]), float(k[i])
    return t_star, k_star


def min_radius(curve: Curve) -> float:
    """1 / max |curvature|; infinite for straight curves."""
    _, k = max_curvature(curve)
    if k == 0.0:
        return math.inf
    return 1.0 / k


def _unit(vec: np.ndarray) -> np.ndarray:
    n = float(np.hypot(*vec))
    if n == 0.0:
        raise GeometryError("zero-length direction")
    return vec / n


def _isosceles_controls(angle: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    half = angle / 2.0
    u = np.zeros(2)
    v = np.array([-math.sin(half), math.cos(half)])
    w = np.array([math.sin(half), math.cos(half)])
    return v, u, w


_cubic_cache: dict[tuple[float, float], tuple[float, float, float]] = {}
_cache_lock = threading.Lock()


def _minimize_scan_golden(f, lo: float, hi: float, scan: int = 17,
                          tol: float = 1e-7) -> tuple[float, float]:
    """Coarse scan to bracket the minimum, then golden-section refinement."""
    xs = np.linspace(lo, hi, scan)
    vals = [f(x) for x in xs]
    i = int(np.argmin(vals))
    a = xs[max(i - 1, 0)]
    b = xs[min(i + 1, scan - 1)]
    x, negv = _golden_max(lambda x: -f(x), a, b, tol=tol)
    if -negv > vals[i]:
        return float(xs[i]), vals[i]
    return x, -negv


def _optimal_unit_cubic(angle: float, ratio: float) -> tuple[float, float, float]:
    """Shape parameters (c_s, c_t) minimizing max |curvature| for the
    canonical triangle with legs (1, ratio) and the given inner angle.

    The minimax objective has a kinked valley that is not axis aligned,
    so per-coordinate descent can stall; instead the inner parameter is
    minimized out for each candidate of the outer one (nested scans with
    golden refinement).  Returns (c_s, c_t, max_curvature).  Cached;
    identical inputs reuse the direct optimization result, so behaviour
    with a warm and a cold cache is the same.
    """
    if ratio > 1.0:
        # mirror symmetry: legs (1, r) are the swapped legs (1, 1/r)
        # scaled by r, so the shape parameters swap and scale
        c_t, c_s, k = _optimal_unit_cubic(angle, 1.0 / ratio)
        return ratio * c_s, ratio * c_t, k / ratio
    key = (round(angle, 12), round(ratio, 12))
    with _cache_lock:
        if key in _cubic_cache:
            return _cubic_cache[key]
    v_dir, u, w_dir = _isosceles_controls(angle)
    v = v_dir * 1.0
    w = w_dir * ratio

    def kmax(c_s: float, c_t: float) -> float:
        curve = CubicBezier(v, u + c_s * v_dir, u + c_t * w_dir, w)
        try:
            return sampled_max_curvature(curve, 256)[1]
        except GeometryError:
            return math.inf  # cusped candidate, never optimal

    cap_s, cap_t = 0.999, 0.999 * ratio
    if abs(ratio - 1.0) <= 1e-9:
        # isosceles wedges have a symmetric optimum
        c_s, k = _minimize_scan_golden(lambda c: kmax(c, c), 0.02 * cap_s,
                                       cap_s, scan=49)
        c_t = c_s
    else:
        def best_c_t(c_s: float) -> tuple[float, float]:
            return _minimize_scan_golden(lambda c: kmax(c_s, c), 1e-6, cap_t,
                                         scan=15, tol=1e-6)

        c_s, _ = _minimize_scan_golden(lambda c: best_c_t(c)[1], 1e-6, cap_s,
                                       scan=15, tol=1e-6)
        c_t, _ = best_c_t(c_s)
    curve = CubicBezier(v, u + c_s * v_dir, u + c_t * w_dir, w)
    k_final = max_curvature(curve)[1]
    result = (float(c_s), float(c_t), k_final)
    with _cache_lock:
        _cubic_cache[key] = result
    return result


def construct_cubic(v: np.ndarray, u: np.ndarray, w: np.ndarray,
                    r_min: float = 0.0) -> tuple[CubicBezier, float, float]:
    """Cubic through v and w with tangents toward u, shaped for minimal
    maximum curvature.

    The inner control points sit at distances c_s and c_t from u along
    the rays toward v and w.  Raises for collinear inputs, where a
    straight segment is the right construction.
    """
    v = np.asarray(v, dtype=float)
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    leg_v = v - u
    leg_w = w - u
    l1 = float(np.hypot(*leg_v))
    l2 = float(np.hypot(*leg_w))
    if l1 == 0.0 or l2 == 0.0:
        raise GeometryError("degenerate wedge: zero leg length")
    cross = leg_v[0] * leg_w[1] - leg_v[1] * leg_w[0]
    if abs(cross) < 1e-12 * l1 * l2:
        raise GeometryError("collinear control points: use a straight segment")
    angle = math.acos(max(-1.0, min(1.0, float(leg_v @ leg_w) / (l1 * l2))))
    c_s_unit, c_t_unit, _ = _optimal_unit_cubic(angle, l2 / l1)
    c_s = c_s_unit * l1
    c_t = c_t_unit * l1
    dir_v = leg_v / l1
    dir_w = leg_w / l2
    curve = CubicBezier(v, u + c_s * dir_v, u + c_t * dir_w, w)
    return curve, c_s, c_t


def isosceles_wedge_curve(angle: float, leg: float, kind: str) -> Curve:
    """Symmetric wedge curve with the given leg length |UV| = |UW|."""
    v_dir, u, w_dir = _isosceles_controls(angle)
    v = v_dir * leg
    w = w_dir * leg
    if kind == "quadratic":
        return QuadBezier(v, u, w)
    curve, _, _ = construct_cubic(v, u, w)
    return curve


def unit_leg_curvature(angle: float, kind: str) -> float:
    """Max |curvature| of the symmetric wedge curve with unit legs."""
    if kind == "quadratic":
        v, u, w = _isosceles_controls(angle)
        return max_curvature(QuadBezier(v, u, w))[1]
    _, _, k = _optimal_unit_cubic(angle, 1.0)
    return k


def select_bow_kind(angle: float) -> str:
    """Quadratic for wedges where it is about as efficient as the cubic
    (sufficiently obtuse angles), cubic otherwise."""
    if angle >= math.pi:
        return "quadratic"
    k_quad = unit_leg_curvature(angle, "quadratic")
    k_cub = unit_leg_curvature(angle, "cubic")
    if k_quad <= k_cub * (1.0 + QUADRATIC_PREFERENCE):
        return "quadratic"
    return "cubic"


def scale_isosceles_for_radius(angle: float, r_min: float, kind: str) -> float:
    """Smallest leg length |UV| = |UW| so the symmetric wedge curve turns
    no tighter than ``r_min``.

    Curvature scales inversely with size, so one evaluation at unit legs
    fixes the length; a guarded nudge absorbs rounding.
    """
    if not 0.0 < angle:
        raise GeometryError("wedge angle must be positive")
    if angle >= math.pi:
        return 0.0
    if not r_min > 0.0:
        raise GeometryError("minimum radius must be positive")
    k_unit = unit_leg_curvature(angle, kind)
    leg = r_min * k_unit
    for _ in range(8):
        if min_radius(isosceles_wedge_curve(angle, leg, kind)) >= r_min:
            break
        leg *= 1.0 + 1e-9
    return leg


def arclength_params(curve: Curve, n: int, dense: int = 2048) -> np.ndarray:
    """n parameter values whose curve points are arclength-uniform."""
    t = np.linspace(0.0, 1.0, dense)
    pts = curve.point(t)
    seg = np.hypot(*(np.diff(pts, axis=0).T))
    s = np.concatenate([[0.0], np.cumsum(seg)])
    if s[-1] == 0.0:
        return np.linspace(0.0, 1.0, n)
    targets = np.linspace(0.0, s[-1], n)
    out = np.interp(targets, s, t)
    out[0], out[-1] = 0.0, 1.0
    return out


def offset_curve(curve: Curve, distance: float, samples: int = OFFSET_SAMPLES,
                 source: str = "") -> OffsetPolyline:
    """Polyline at constant normal distance from the reference curve.

    Positive distances go along the left normal of the direction of
    travel.  An offset reaching the center of curvature would fold the
    polyline onto itself and is rejected.
    """
    t = arclength_params(curve, samples)
    d1 = curve.deriv1(t)
    speed = np.hypot(d1[:, 0], d1[:, 1])
    if np.any(speed < 1e-9 * _size_scale(curve)):
        raise GeometryError("vanishing first derivative along offset curve")
    normals = np.column_stack([-d1[:, 1], d1[:, 0]]) / speed[:, None]
    if distance != 0.0:
        k = curvature(curve, t)
        if np.any(1.0 - distance * k <= 1e-9):
            raise GeometryError(
                f"offset {distance} reaches the center of curvature "
                "(self-intersecting offset)")
    pts = curve.point(t) + distance * normals
    return OffsetPolyline(pts, float(distance), source)


def polyline_curvature(points: np.ndarray) -> np.ndarray:
    """Signed curvature at interior points from circles through each
    consecutive point triple; collinear triples give zero."""
    pts = np.asarray(points, dtype=float)
    if len(pts) < 3:
        raise GeometryError("polyline curvature needs at least three points")
    a = pts[1:-1] - pts[:-2]
    b = pts[2:] - pts[1:-1]
    c = pts[2:] - pts[:-2]
    la = np.hypot(a[:, 0], a[:, 1])
    lb = np.hypot(b[:, 0], b[:, 1])
    lc = np.hypot(c[:, 0], c[:, 1])
    if np.any(la == 0.0) or np.any(lb == 0.0):
        raise GeometryError("duplicate adjacent points in polyline")
    cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    denom = la * lb * lc
    return 2.0 * cross / denom


def polyline_min_radius(points: np.ndarray) -> float:
    k = np.max(np.abs(polyline_curvature(points)))
    if k == 0.0:
        return math.inf
    return 1.0 / float(k)
