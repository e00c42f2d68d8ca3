"""几何基础运算测试"""
import math

import numpy as np
import pytest

from conftest import square_x
from app.models.geometry import Aabb, GeomParams, Ray, Segment
from app.models.surface import Surface, newell_normal
from app.services.geometry import (
    azimuth_angle,
    azimuth_angle_checked,
    is_front_facing,
    local_frame,
    point_surface_distance,
    reflection_point,
    segment_from_ray,
    segment_surface_distance,
    segment_surface_intersection,
    signed_distance,
    spherocylinder_candidate,
    zenith_angle,
)
from app.utils.errors import ConfigError, GeometryError


def floor_surface(center=(3.0, 3.0), half=1.0):
    cx, cy = center
    vertices = [(cx - half, cy - half, 0.0), (cx + half, cy - half, 0.0),
                (cx + half, cy + half, 0.0), (cx - half, cy + half, 0.0)]
    return Surface('floor', vertices, 'ground', 'GroundSurface')


def point_segment_distance(points, start, end):
    d = end - start
    t = np.clip((points - start) @ d / (d @ d), 0.0, 1.0)
    return np.linalg.norm(points - (start + t[:, None] * d), axis=1)


def moller_trumbore(origin, direction, a, b, c):
    e1, e2 = b - a, c - a
    p = np.cross(direction, e2)
    det = e1 @ p
    inv = 1.0 / det
    s = origin - a
    u = (s @ p) * inv
    q = np.cross(s, e1)
    v = (direction @ q) * inv
    t = (e2 @ q) * inv
    assert 0.0 <= u <= 1.0 and 0.0 <= v and u + v <= 1.0
    return origin + t * direction


# ---------------------------------------------------------------------------
# 基础类型
# ---------------------------------------------------------------------------

class TestPrimitives:
    def test_ray_rejects_non_unit_direction(self):
        with pytest.raises(GeometryError):
            Ray((0, 0, 0), (2, 0, 0), 1.0)

    def test_ray_rejects_negative_range(self):
        with pytest.raises(GeometryError):
            Ray((0, 0, 0), (1, 0, 0), -0.1)

    def test_ray_rejects_nan_origin(self):
        with pytest.raises(GeometryError):
            Ray((math.nan, 0, 0), (1, 0, 0), 1.0)

    def test_geom_params_defaults(self):
        params = GeomParams()
        assert params.epsilon == 1e-6
        assert params.assoc_radius == 0.05
        assert params.segment_length == 1.0
        assert params.half_length == 0.5

    @pytest.mark.parametrize('field', ['epsilon', 'assoc_radius', 'segment_length'])
    def test_geom_params_rejects_non_positive(self, field):
        with pytest.raises(ConfigError):
            GeomParams(**{field: 0.0})

    def test_aabb_intersects_touching_boxes(self):
        a = Aabb((0, 0, 0), (1, 1, 1))
        b = Aabb((1, 0, 0), (2, 1, 1))
        c = Aabb((1.1, 0, 0), (2, 1, 1))
        assert a.intersects(b)
        assert not a.intersects(c)

    def test_aabb_rejects_inverted_corners(self):
        with pytest.raises(GeometryError):
            Aabb((1, 0, 0), (0, 1, 1))


class TestSurface:
    def test_newell_normal_follows_vertex_order(self):
        ccw = np.array([(0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0)], dtype=float)
        np.testing.assert_allclose(newell_normal(ccw), [0, 0, 1])
        np.testing.assert_allclose(newell_normal(ccw[::-1]), [0, 0, -1])

    def test_closing_vertex_is_dropped(self):
        surface = Surface('s', [(0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 0, 0)], 'o', 'C')
        assert len(surface.vertices) == 3

    def test_too_few_vertices(self):
        with pytest.raises(GeometryError):
            Surface('s', [(0, 0, 0), (1, 0, 0)], 'o', 'C')

    def test_non_coplanar_vertices(self):
        with pytest.raises(GeometryError):
            Surface('s', [(0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0.01)], 'o', 'C')

    def test_self_intersecting_polygon(self):
        with pytest.raises(GeometryError):
            Surface('s', [(0, 0, 0), (1, 1, 0), (1, 0, 0), (0, 1, 0)], 'o', 'C')

    def test_explicit_normal_overrides_vertex_order(self):
        surface = square_x('w', 5.0, normal=(-1, 0, 0))
        np.testing.assert_allclose(surface.normal, [-1, 0, 0])
        assert surface.normal_explicit

    def test_round_trip_dict(self):
        surface = square_x('w', 5.0, function='facade', material='brick')
        again = Surface.from_dict(surface.to_dict())
        np.testing.assert_array_equal(again.vertices, surface.vertices)
        np.testing.assert_array_equal(again.normal, surface.normal)
        assert again.function == 'facade'
        assert again.material == 'brick'


# ---------------------------------------------------------------------------
# 反射点与线段
# ---------------------------------------------------------------------------

class TestReflectionPoint:
    def test_axis_aligned(self):
        np.testing.assert_array_equal(reflection_point(Ray((0, 0, 0), (1, 0, 0), 5)), [5, 0, 0])

    def test_offset_origin(self):
        np.testing.assert_array_equal(reflection_point(Ray((1, 2, 3), (0, 0, 1), 2.5)), [1, 2, 5.5])

    def test_zero_range(self):
        np.testing.assert_array_equal(reflection_point(Ray((1, 2, 3), (0, 0, 1), 0)), [1, 2, 3])


class TestSegmentFromRay:
    def test_default_length(self):
        segment = segment_from_ray(Ray((0, 0, 0), (1, 0, 0), 5), GeomParams())
        np.testing.assert_array_equal(segment.center, [5, 0, 0])
        np.testing.assert_array_equal(segment.start, [4.5, 0, 0])
        np.testing.assert_array_equal(segment.end, [5.5, 0, 0])

    def test_zero_range_straddles_origin(self):
        segment = segment_from_ray(Ray((0, 0, 0), (1, 0, 0), 0), GeomParams())
        np.testing.assert_array_equal(segment.start, [-0.5, 0, 0])
        np.testing.assert_array_equal(segment.end, [0.5, 0, 0])


# ---------------------------------------------------------------------------
# 候选判定
# ---------------------------------------------------------------------------

class TestSpherocylinderCandidate:
    segment = Segment((5, 0, 0), (1, 0, 0), 0.5)
    beam_dir = np.array([1.0, 0.0, 0.0])

    def test_front_facing_hit(self):
        wall = square_x('w', 5.0, normal=(-1, 0, 0))
        assert is_front_facing(self.beam_dir, wall.normal)
        assert spherocylinder_candidate(self.segment, wall, self.beam_dir, 0.05)

    def test_back_facing_culled(self):
        wall = square_x('w', 5.0, normal=(1, 0, 0))
        assert not is_front_facing(self.beam_dir, wall.normal)
        assert not spherocylinder_candidate(self.segment, wall, self.beam_dir, 0.05)

    def test_lateral_offset_6cm_rejected(self):
        wall = square_x('w', 5.0, center=(0.56, 0.0))
        assert not spherocylinder_candidate(self.segment, wall, self.beam_dir, 0.05)

    def test_lateral_offset_4cm_accepted(self):
        wall = square_x('w', 5.0, center=(0.54, 0.0))
        assert spherocylinder_candidate(self.segment, wall, self.beam_dir, 0.05)

    def test_distance_through_polygon_is_zero(self):
        wall = square_x('w', 5.0)
        assert segment_surface_distance(self.segment, wall) == 0.0

    def test_distance_beyond_segment_end(self):
        wall = square_x('w', 6.0)
        assert segment_surface_distance(self.segment, wall) == pytest.approx(0.5)

    def test_in_plane_segment(self):
        floor = floor_surface(center=(0.0, 0.0), half=1.0)
        segment = Segment((3.0, 0.0, 0.0), (1, 0, 0), 0.5)
        assert segment_surface_distance(segment, floor) == pytest.approx(1.5)

    def test_exact_distance_matches_dense_sampling(self, rng):
        for _ in range(20):
            a, b, c = rng.uniform(-1.0, 1.0, size=(3, 3))
            try:
                triangle = Surface('t', [a, b, c], 'o', 'C')
            except GeometryError:
                continue
            start = rng.uniform(-2.0, 2.0, size=3)
            direction = rng.normal(size=3)
            direction /= np.linalg.norm(direction)
            segment = Segment(start + 0.5 * direction, direction, 0.5)

            weights = np.array([(i, j) for i in range(61) for j in range(61 - i)], dtype=float) / 60.0
            samples = a + weights[:, :1] * (b - a) + weights[:, 1:] * (c - a)
            oracle = float(np.min(point_segment_distance(samples, segment.start, segment.end)))
            exact = segment_surface_distance(segment, triangle)
            assert exact <= oracle + 1e-9
            assert oracle - exact < 0.1


# ---------------------------------------------------------------------------
# 交点、有向距离、天顶角
# ---------------------------------------------------------------------------

class TestIntersection:
    def test_perpendicular_hit(self):
        segment = Segment((5, 0, 0), (1, 0, 0), 0.5)
        point = segment_surface_intersection(segment, square_x('w', 5.0))
        np.testing.assert_allclose(point, [5, 0, 0])

    def test_out_of_reach(self):
        segment = Segment((5, 0, 0), (1, 0, 0), 0.5)
        assert segment_surface_intersection(segment, square_x('w', 6.0)) is None

    def test_parallel_segment(self):
        segment = Segment((5, 0, 0), (0, 1, 0), 0.5)
        assert segment_surface_intersection(segment, square_x('w', 5.0)) is None

    def test_oblique_segment_against_tilted_triangle(self):
        a = np.array([5.0, -1.0, -1.0])
        b = np.array([5.5, 1.0, -1.0])
        c = np.array([4.8, 0.0, 1.5])
        triangle = Surface('t', [a, b, c], 'o', 'C')
        direction = np.array([1.0, 0.2, 0.1])
        direction /= np.linalg.norm(direction)
        inside = (a + b + c) / 3.0
        segment = Segment(inside + 0.2 * direction, direction, 0.5)

        point = segment_surface_intersection(segment, triangle)
        expected = moller_trumbore(segment.start, direction, a, b, c)
        np.testing.assert_allclose(point, expected, atol=1e-9)


class TestSignedDistance:
    d = np.array([1.0, 0.0, 0.0])

    def test_intersection_behind_measurement(self):
        assert signed_distance((5, 0, 0), (5.4, 0, 0), self.d) == pytest.approx(-0.4)

    def test_identity(self):
        assert signed_distance((5, 0, 0), (5, 0, 0), self.d) == 0.0

    def test_intersection_before_measurement(self):
        assert signed_distance((5, 0, 0), (4.7, 0, 0), self.d) == pytest.approx(0.3)


class TestZenithAngle:
    def test_perpendicular(self):
        assert zenith_angle((1, 0, 0), (-1, 0, 0)) == 0.0

    def test_forty_five_degrees(self):
        h = math.sqrt(2.0) / 2.0
        assert zenith_angle((1, 0, 0), (-h, h, 0)) == pytest.approx(math.pi / 4)

    def test_grazing(self):
        assert zenith_angle((1, 0, 0), (0, 1, 0)) == pytest.approx(math.pi / 2)

    def test_back_facing_is_clamped(self):
        assert zenith_angle((1, 0, 0), (1, 0, 0)) == pytest.approx(math.pi / 2)


# ---------------------------------------------------------------------------
# 局部坐标系与方位角
# ---------------------------------------------------------------------------

class TestLocalFrame:
    def test_horizontal_floor(self):
        frame = local_frame(floor_surface(), (0.0, 0.0, 2.0))
        np.testing.assert_allclose(frame.u, [1, 0, 0])
        np.testing.assert_allclose(frame.v, [0, 1, 0])
        np.testing.assert_allclose(frame.origin, [0, 0, 0])

    def test_vertical_wall(self):
        wall = Surface('w', [(0, 2, 0), (1, 2, 0), (1, 2, 1), (0, 2, 1)], 'o', 'WallSurface',
                       normal=(0, -1, 0))
        frame = local_frame(wall, (0.5, 0.0, 0.5))
        np.testing.assert_allclose(frame.u, [0, 0, 1], atol=1e-15)
        np.testing.assert_allclose(frame.v, [-1, 0, 0], atol=1e-15)
        basis = np.vstack((frame.u, frame.v, frame.n))
        np.testing.assert_allclose(basis @ basis.T, np.eye(3), atol=1e-12)

    def test_floor_azimuths(self):
        frame = local_frame(floor_surface(), (0.0, 0.0, 2.0))
        assert azimuth_angle(frame.origin + frame.u, frame) == pytest.approx(0.0)
        assert azimuth_angle(frame.origin + frame.v, frame) == pytest.approx(math.pi / 2)
        assert azimuth_angle(frame.origin - frame.u, frame) == pytest.approx(math.pi)

    def test_azimuth_range(self, rng):
        frame = local_frame(floor_surface(), (0.0, 0.0, 2.0))
        for point in rng.uniform(-5, 5, size=(200, 3)):
            phi = azimuth_angle(point, frame)
            assert 0.0 <= phi < 2.0 * math.pi

    def test_degenerate_azimuth(self):
        frame = local_frame(floor_surface(), (0.0, 0.0, 2.0))
        assert azimuth_angle_checked(frame.origin, frame) == (0.0, True)

    def test_azimuth_invariant_under_translation(self):
        floor = floor_surface()
        moved = floor_surface(center=(13.0, -7.0))
        shift = np.array([10.0, -10.0, 0.0])
        sensor = np.array([0.5, 0.2, 2.0])
        point = np.array([3.3, 2.1, 0.0])
        phi = azimuth_angle(point, local_frame(floor, sensor))
        phi_moved = azimuth_angle(point + shift, local_frame(moved, sensor + shift))
        assert phi_moved == pytest.approx(phi, abs=1e-12)


class TestPointSurfaceDistance:
    def test_above_interior(self):
        assert point_surface_distance(np.array([3.0, 3.0, 2.0]), floor_surface()) == pytest.approx(2.0)

    def test_diagonal_to_edge(self):
        distance = point_surface_distance(np.array([5.0, 3.0, 1.0]), floor_surface())
        assert distance == pytest.approx(math.sqrt(2.0))
