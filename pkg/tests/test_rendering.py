"""
Unit tests for primitives and the planar depth renderer.
"""
import numpy as np
import pytest

from services.camera import pixel_rays
from services.geometry import Intrinsics, Plane, Pose, look_at
from services.primitives import (
    MapPrimitive,
    QueryPrimitive,
    polygon_area,
    rectangle,
    sample_primitive_points,
)
from services.rendering import NO_PRIMITIVE, clip_near, render_depth, render_with_ids
from simulation.scene import build_map
from tests.oracles import ray_cast_depth, ray_cast_pixels

EX, EY, EZ = np.eye(3)


def facing_panel(depth: float, half: float = 0.5, index: int = 0, center_x: float = 0.0) -> MapPrimitive:
    """Square at z = depth in front of an identity camera."""
    return rectangle(np.array([center_x, 0.0, depth]), EX, EY, half, half, index=index)


# =====================
# Primitive Tests
# =====================

class TestPrimitives:
    """Tests for query and map primitive types."""

    def test_rectangle_plane(self):
        """Test the rectangle normal is u × v and the boundary lies on the plane."""
        prim = rectangle(np.array([1.0, 2.0, 3.0]), EY, EZ, 0.5, 1.0, index=4)
        np.testing.assert_allclose(prim.plane.normal, EX, atol=1e-12)
        assert np.max(np.abs(prim.plane.residual(prim.boundary))) < 1e-12
        assert prim.area == pytest.approx(2.0)
        np.testing.assert_allclose(prim.centroid, [1.0, 2.0, 3.0], atol=1e-12)

    def test_skewed_axes_plane(self):
        """Test non-perpendicular axes still give a plane through the boundary."""
        prim = rectangle(np.array([0.0, 0.0, 2.0]), EX, EX + EY, 0.5, 0.5, index=0)
        np.testing.assert_allclose(prim.plane.normal, EZ, atol=1e-12)
        assert prim.plane.offset == pytest.approx(-2.0)
        assert np.max(np.abs(prim.plane.residual(prim.boundary))) < 1e-12

    def test_samples_inside(self):
        """Test sampled points stay on the plane and inside the rectangle."""
        prim = rectangle(np.zeros(3), EX, EY, 1.0, 0.5, index=0)
        points = sample_primitive_points(prim, 500, seed=3)
        assert points.shape == (500, 3)
        np.testing.assert_allclose(points[:, 2], 0.0, atol=1e-12)
        assert np.all(np.abs(points[:, 0]) <= 1.0 + 1e-12)
        assert np.all(np.abs(points[:, 1]) <= 0.5 + 1e-12)

    def test_samples_deterministic(self):
        """Test sampling is a function of the seed."""
        prim = rectangle(np.zeros(3), EX, EY, 1.0, 0.5, index=0)
        np.testing.assert_array_equal(
            sample_primitive_points(prim, 50, seed=9), sample_primitive_points(prim, 50, seed=9)
        )

    def test_polygon_area_square(self):
        """Test the shoelace area of a unit square."""
        assert polygon_area(np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)) == pytest.approx(1.0)

    def test_empty_mask_rejected(self):
        """Test a query primitive needs at least one pixel."""
        with pytest.raises(ValueError):
            QueryPrimitive(plane=Plane(-EZ, 2.0), mask=np.zeros((4, 4), dtype=bool), index=0)

    def test_query_pixels_order(self):
        """Test mask pixels are reported as (x, y)."""
        mask = np.zeros((4, 5), dtype=bool)
        mask[1, 3] = True
        prim = QueryPrimitive(plane=Plane(-EZ, 2.0), mask=mask, index=0)
        np.testing.assert_array_equal(prim.pixels, [[3.0, 1.0]])
        assert prim.area == 1


# =====================
# Renderer Tests
# =====================

class TestClipNear:
    """Tests for near-plane polygon clipping."""

    def test_all_in_front(self):
        """Test a polygon in front of the camera is unchanged."""
        polygon = np.array([[0, 0, 1], [1, 0, 1], [1, 1, 2]], dtype=float)
        np.testing.assert_array_equal(clip_near(polygon), polygon)

    def test_crossing(self):
        """Test a polygon crossing z = 0 keeps only the front part."""
        polygon = np.array([[-1, 0, -1], [1, 0, -1], [1, 0, 1], [-1, 0, 1]], dtype=float)
        clipped = clip_near(polygon, near=0.1)
        assert len(clipped) == 4
        assert np.all(clipped[:, 2] >= 0.1 - 1e-12)

    def test_all_behind(self):
        """Test a polygon behind the camera clips to nothing."""
        polygon = np.array([[0, 0, -1], [1, 0, -1], [1, 1, -2]], dtype=float)
        assert len(clip_near(polygon)) == 0


class TestRenderer:
    """Tests for render_with_ids/render_depth."""

    def test_fronto_parallel_depth(self, intrinsics):
        """Test a facing square renders constant depth over its footprint."""
        depth, ids = render_with_ids([facing_panel(2.0)], Pose.identity(), intrinsics)
        covered = ids == 0
        # ±0.25 m at 2 m is ±25 px around the principal point: 51 × 51 pixel centers
        assert 48 * 48 <= covered.sum() <= 51 * 51
        np.testing.assert_allclose(depth.values[covered], 2.0, atol=1e-12)
        assert covered[30, 40]
        assert not covered[0, 0]
        assert depth.values[0, 0] == 0.0

    def test_occlusion(self, intrinsics):
        """Test the nearer primitive wins where two overlap."""
        far = facing_panel(3.0, half=1.0, index=0)
        near = facing_panel(2.0, half=0.2, index=1)
        depth, ids = render_with_ids([far, near], Pose.identity(), intrinsics)
        assert ids[30, 40] == 1
        assert depth.values[30, 40] == pytest.approx(2.0)
        assert ids[30, 15] == 0
        assert depth.values[30, 15] == pytest.approx(3.0)

    def test_ids_are_positions(self, intrinsics):
        """Test the id buffer holds list positions, not primitive indices."""
        prim = facing_panel(2.0, index=17)
        _, ids = render_with_ids([prim], Pose.identity(), intrinsics)
        assert set(np.unique(ids)) == {NO_PRIMITIVE, 0}

    def test_behind_camera_empty(self, intrinsics):
        """Test a primitive behind the camera renders nothing."""
        depth = render_depth([facing_panel(-2.0)], Pose.identity(), intrinsics)
        assert not depth.valid_mask.any()

    def test_matches_ray_casting(self, box_map, corner_pose, intrinsics):
        """Test rendered depth agrees with per-pixel ray casting."""
        depth = render_depth(box_map, corner_pose, intrinsics)
        expected = ray_cast_depth(box_map, corner_pose, intrinsics)
        both = depth.valid_mask & (expected > 0)
        assert both.mean() > 0.98
        agree = np.abs(depth.values[both] - expected[both]) < 1e-9
        assert agree.mean() > 0.99

    @pytest.mark.parametrize("seed", range(20))
    def test_sampled_pixels_match_ray_casting(self, small_scene_spec, seed):
        """Test 1000 random covered pixels of a furnished room agree with ray casting within 1e-6 m."""
        rng = np.random.default_rng(seed)
        spec = small_scene_spec.model_copy(update={"interior_primitives": 4, "rng_seed": seed})
        map_primitives = build_map(spec, rng)
        X, Y, Z = spec.extents
        center = rng.uniform([0.3 * X, 0.3 * Y, 0.8], [0.7 * X, 0.7 * Y, Z - 0.8])
        yaw, pitch = rng.uniform(0.0, 2.0 * np.pi), rng.uniform(-0.4, 0.2)
        pose = look_at(center, np.array([np.cos(pitch) * np.cos(yaw), np.cos(pitch) * np.sin(yaw), np.sin(pitch)]))
        K = Intrinsics(fx=250.0, fy=250.0, cx=160.0, cy=120.0, width=320, height=240)

        depth, ids = render_with_ids(map_primitives, pose, K)
        covered = np.flatnonzero(depth.valid_mask.ravel())
        picks = rng.choice(covered, size=1000, replace=False)
        pixels = np.column_stack([picks % K.width, picks // K.width])
        rendered = depth.values.ravel()[picks]

        np.testing.assert_allclose(rendered, ray_cast_pixels(map_primitives, pose, K, pixels), rtol=0, atol=1e-6)
        points = pose.apply(pixel_rays(K, pixels) * rendered[:, None])
        for point, position in zip(points, ids.ravel()[picks]):
            assert abs(map_primitives[position].plane.residual(point)) < 1e-6

    def test_closed_room_fully_covered(self, box_map, corner_pose, intrinsics):
        """Test a camera inside a closed room sees depth everywhere."""
        depth = render_depth(box_map, corner_pose, intrinsics)
        assert depth.valid_mask.mean() > 0.99
