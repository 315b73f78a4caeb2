"""
Unit tests for the geometry and camera services.

Tests cover:
- Plane transport through poses
- SE(3) composition, inversion, exp/log
- Weighted Kabsch rotation fitting
- Pinhole projection and plane-induced depth
- Rotation/translation error measures
"""
import math

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from services.camera import (
    DepthMap,
    bilinear_sample,
    plane_depth_at_pixel,
    plane_depths,
    project,
    unproject,
)
from services.errors import BehindCamera, DegenerateNormals, LogNearSingularity, NegativeDepth, RayParallel
from services.geometry import (
    Intrinsics,
    Plane,
    Pose,
    compose,
    fit_plane,
    invert,
    kabsch,
    look_at,
    rotation_angle,
    se3_exp,
    se3_log,
    so3_exp,
    so3_log,
    transform_plane,
    translation_distance,
)
from tests.oracles import points_on_plane, random_rotation, random_unit_vectors, refit_plane_svd, same_plane

RZ90 = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])


def assert_same_pose(a: Pose, b: Pose, atol: float = 1e-9):
    np.testing.assert_allclose(a.rotation, b.rotation, atol=atol)
    np.testing.assert_allclose(a.translation, b.translation, atol=atol)


# =====================
# Plane Tests
# =====================

class TestPlane:
    """Tests for the Plane value type."""

    def test_normal_is_unit(self):
        """Test the normal is normalized and the offset scaled with it."""
        plane = Plane(np.array([0.0, 3.0, 4.0]), 10.0)
        assert np.linalg.norm(plane.normal) == pytest.approx(1.0, abs=1e-9)
        assert plane.offset == pytest.approx(2.0)

    def test_zero_normal_rejected(self):
        """Test a zero normal raises DegenerateNormals."""
        with pytest.raises(DegenerateNormals):
            Plane(np.zeros(3), 1.0)

    def test_points_satisfy_equation(self, rng):
        """Test generated points lie on the plane."""
        plane = Plane(random_unit_vectors(rng, 1)[0], 1.7)
        points = points_on_plane(plane, rng, 20)
        assert np.max(np.abs(plane.residual(points))) < 1e-9

    def test_list_round_trip(self):
        """Test to_list/from_list keep the four coefficients."""
        plane = Plane(np.array([0.0, 0.0, -1.0]), 2.0)
        assert Plane.from_list(plane.to_list()).to_list() == plane.to_list()


class TestTransformPlane:
    """Tests for transform_plane."""

    def test_identity(self, rng):
        """Test the identity pose leaves the plane unchanged."""
        plane = Plane(random_unit_vectors(rng, 1)[0], -0.8)
        moved = transform_plane(Pose.identity(), plane)
        np.testing.assert_allclose(moved.normal, plane.normal, atol=1e-12)
        assert moved.offset == pytest.approx(plane.offset)

    def test_pure_translation(self):
        """Test t = (1, 0, 0) on the x = 0 plane gives d' = -1."""
        pose = Pose(np.eye(3), np.array([1.0, 0.0, 0.0]))
        moved = transform_plane(pose, Plane(np.array([1.0, 0.0, 0.0]), 0.0))
        np.testing.assert_allclose(moved.normal, [1.0, 0.0, 0.0])
        assert moved.offset == pytest.approx(-1.0)

    def test_point_transport(self, rng):
        """Test 1000 random (pose, plane) pairs agree with transporting points and refitting."""
        for _ in range(1000):
            pose = Pose(random_rotation(rng), rng.uniform(-3, 3, size=3))
            plane = Plane(random_unit_vectors(rng, 1)[0], rng.uniform(-2, 2))
            normal, offset = refit_plane_svd(pose.apply(points_on_plane(plane, rng, 50)))
            assert same_plane(normal, offset, transform_plane(pose, plane), atol=1e-7)

    def test_transported_points_residual(self, rng):
        """Test points on the source plane satisfy the transformed plane for many poses."""
        for _ in range(10):
            pose = Pose(random_rotation(rng), rng.uniform(-3, 3, size=3))
            plane = Plane(random_unit_vectors(rng, 1)[0], rng.uniform(-2, 2))
            points = pose.apply(points_on_plane(plane, rng, 30))
            assert np.max(np.abs(transform_plane(pose, plane).residual(points))) < 1e-7

    def test_composition(self, rng):
        """Test transforming by a∘b equals transforming by b then a."""
        a = Pose(random_rotation(rng), rng.uniform(-1, 1, size=3))
        b = Pose(random_rotation(rng), rng.uniform(-1, 1, size=3))
        plane = Plane(random_unit_vectors(rng, 1)[0], 0.6)
        direct = transform_plane(compose(a, b), plane)
        chained = transform_plane(a, transform_plane(b, plane))
        np.testing.assert_allclose(direct.normal, chained.normal, atol=1e-9)
        assert direct.offset == pytest.approx(chained.offset, abs=1e-9)

    def test_sign_preserved(self):
        """Test the normal is carried by R without re-orientation."""
        pose = Pose(RZ90, np.array([0.0, 0.0, 5.0]))
        moved = transform_plane(pose, Plane(np.array([0.0, 0.0, -1.0]), 2.0))
        np.testing.assert_allclose(moved.normal, [0.0, 0.0, -1.0], atol=1e-12)
        assert moved.offset == pytest.approx(7.0)


class TestFitPlane:
    """Tests for total-least-squares plane fitting."""

    def test_exact_points(self, rng):
        """Test exact points recover the plane up to sign."""
        plane = Plane(np.array([0.2, -0.5, 0.8]), 1.2)
        fitted = fit_plane(points_on_plane(plane, rng, 40))
        assert same_plane(plane.normal, plane.offset, fitted, atol=1e-9)

    def test_too_few_points(self):
        """Test fewer than 3 points raise DegenerateNormals."""
        with pytest.raises(DegenerateNormals):
            fit_plane(np.zeros((2, 3)))


# =====================
# SE(3) Tests
# =====================

class TestPoseAlgebra:
    """Tests for compose/invert."""

    def test_compose_identity(self, random_pose):
        """Test identity is neutral under composition."""
        assert_same_pose(compose(Pose.identity(), random_pose), random_pose)
        assert_same_pose(compose(random_pose, Pose.identity()), random_pose)

    def test_double_inverse(self, random_pose):
        """Test invert(invert(p)) = p."""
        assert_same_pose(invert(invert(random_pose)), random_pose)

    def test_compose_with_inverse(self, random_pose):
        """Test a∘a⁻¹ is the identity."""
        assert_same_pose(compose(random_pose, invert(random_pose)), Pose.identity())

    def test_compose_order(self, rng):
        """Test compose applies its second argument first."""
        a = Pose(random_rotation(rng), rng.uniform(-1, 1, size=3))
        b = Pose(random_rotation(rng), rng.uniform(-1, 1, size=3))
        x = rng.uniform(-1, 1, size=3)
        np.testing.assert_allclose(compose(a, b).apply(x), a.apply(b.apply(x)), atol=1e-12)

    def test_rotation_orthonormal(self, random_pose):
        """Test rotations are orthonormal with determinant +1."""
        R = random_pose.rotation
        np.testing.assert_allclose(R.T @ R, np.eye(3), atol=1e-9)
        assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-9)

    def test_pose_list_layout(self):
        """Test to_list is the row-major 3×4 matrix."""
        pose = Pose(np.eye(3), np.array([1.0, 2.0, 3.0]))
        assert pose.to_list() == [1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 2.0, 0.0, 0.0, 1.0, 3.0]


class TestExpLog:
    """Tests for the SO(3)/SE(3) exponential and logarithm maps."""

    def test_zero_twist(self):
        """Test the zero twist maps to the identity."""
        assert_same_pose(se3_exp(np.zeros(6)), Pose.identity(), atol=1e-15)

    def test_pure_rotation(self):
        """Test (0, 0, π/2, 0, 0, 0) is a 90° rotation about z."""
        pose = se3_exp(np.array([0.0, 0.0, math.pi / 2, 0.0, 0.0, 0.0]))
        np.testing.assert_allclose(pose.rotation, RZ90, atol=1e-12)
        np.testing.assert_allclose(pose.translation, np.zeros(3), atol=1e-15)

    def test_pure_translation(self):
        """Test a twist without rotation translates by v."""
        pose = se3_exp(np.array([0.0, 0.0, 0.0, 1.0, -2.0, 0.5]))
        np.testing.assert_allclose(pose.translation, [1.0, -2.0, 0.5], atol=1e-15)

    def test_round_trip_small(self, rng):
        """Test log(exp(ξ)) = ξ for small twists."""
        for _ in range(20):
            xi = rng.uniform(-0.1, 0.1, size=6)
            np.testing.assert_allclose(se3_log(se3_exp(xi)), xi, atol=1e-9)

    def test_round_trip_large(self, rng):
        """Test the round trip holds up to 3 rad."""
        for angle in (1e-7, 0.5, 1.5, 2.5, 3.0):
            axis = random_unit_vectors(rng, 1)[0]
            xi = np.concatenate([angle * axis, rng.uniform(-1, 1, size=3)])
            np.testing.assert_allclose(se3_log(se3_exp(xi)), xi, atol=1e-9)

    def test_so3_matches_scipy(self, rng):
        """Test Rodrigues agrees with scipy's rotation vectors."""
        omega = rng.uniform(-1.5, 1.5, size=3)
        np.testing.assert_allclose(so3_exp(omega), Rotation.from_rotvec(omega).as_matrix(), atol=1e-12)

    def test_log_near_pi(self):
        """Test the log refuses rotations at π."""
        with pytest.raises(LogNearSingularity):
            so3_log(so3_exp(np.array([0.0, 0.0, math.pi])))


# =====================
# Kabsch Tests
# =====================

class TestKabsch:
    """Tests for weighted Kabsch."""

    def test_two_exact_pairs(self):
        """Test two pairs related by a 90° z-rotation recover it."""
        e1, e2 = np.eye(3)[0], np.eye(3)[1]
        R = kabsch([(e1, e2), (e2, -e1)], [1.0, 1.0])
        np.testing.assert_allclose(R, RZ90, atol=1e-9)

    def test_identical_pairs(self, rng):
        """Test identical source and target give the identity."""
        normals = random_unit_vectors(rng, 5)
        np.testing.assert_allclose(kabsch([(n, n) for n in normals]), np.eye(3), atol=1e-9)

    def test_exact_recovery(self, rng):
        """Test noiseless pairs recover the generating rotation."""
        R_true = random_rotation(rng)
        normals = random_unit_vectors(rng, 8)
        R = kabsch([(n, R_true @ n) for n in normals], rng.uniform(0.5, 2.0, size=8))
        assert math.radians(rotation_angle(R, R_true)) < 1e-7

    def test_beats_rotation_sampling(self, rng):
        """Test the Kabsch cost is no worse than the best of many sampled rotations."""
        R_true = random_rotation(rng)
        source = random_unit_vectors(rng, 10)
        target = source @ R_true.T + 0.05 * rng.standard_normal((10, 3))
        target /= np.linalg.norm(target, axis=1, keepdims=True)
        weights = rng.uniform(0.5, 2.0, size=10)

        def cost(R):
            return float(np.sum(weights * np.sum((target - source @ R.T) ** 2, axis=1)))

        R = kabsch(list(zip(source, target)), weights)
        sampled = Rotation.random(20000, random_state=3).as_matrix()
        residuals = target[None] - np.einsum("kij,nj->kni", sampled, source)
        best_sampled = float(np.min(np.einsum("n,kni,kni->k", weights, residuals, residuals)))
        assert cost(R) <= best_sampled + 1e-12

    def test_proper_rotation(self, rng):
        """Test the result never reflects."""
        source = random_unit_vectors(rng, 6)
        R = kabsch(list(zip(source, -source)))
        assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-9)

    def test_parallel_sources(self):
        """Test all-parallel normals raise DegenerateNormals."""
        n = np.array([0.0, 0.0, 1.0])
        with pytest.raises(DegenerateNormals):
            kabsch([(n, n), (-n, -n)])

    def test_single_pair(self):
        """Test one pair is not enough."""
        n = np.array([0.0, 0.0, 1.0])
        with pytest.raises(DegenerateNormals):
            kabsch([(n, n)])


# =====================
# Camera Tests
# =====================

class TestProjection:
    """Tests for project/unproject."""

    def test_principal_ray(self, vga_intrinsics):
        """Test (0, 0, 2) projects to the principal point at depth 2."""
        pixel, depth = project(vga_intrinsics, np.array([0.0, 0.0, 2.0]))
        np.testing.assert_allclose(pixel, [320.0, 240.0])
        assert depth == 2.0

    def test_unit_lateral_offset(self, vga_intrinsics):
        """Test unproject((cx + fx, cy), 1) = (1, 0, 1)."""
        K = vga_intrinsics
        np.testing.assert_allclose(unproject(K, np.array([K.cx + K.fx, K.cy]), 1.0), [1.0, 0.0, 1.0])

    def test_round_trip(self, rng, vga_intrinsics):
        """Test project then unproject returns the point."""
        for _ in range(100):
            x = np.array([rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(0.2, 8)])
            pixel, depth = project(vga_intrinsics, x)
            np.testing.assert_allclose(unproject(vga_intrinsics, pixel, depth), x, rtol=1e-9, atol=1e-12)

    def test_behind_camera(self, vga_intrinsics):
        """Test z ≤ 0 raises BehindCamera."""
        with pytest.raises(BehindCamera):
            project(vga_intrinsics, np.array([0.0, 0.0, -1.0]))

    def test_negative_depth(self, vga_intrinsics):
        """Test nonpositive depth raises NegativeDepth."""
        with pytest.raises(NegativeDepth):
            unproject(vga_intrinsics, np.array([10.0, 10.0]), 0.0)

    def test_principal_point_inside_image(self):
        """Test intrinsics reject a principal point outside the image."""
        with pytest.raises(ValueError):
            Intrinsics(fx=100, fy=100, cx=100, cy=30, width=80, height=60)


class TestPlaneDepth:
    """Tests for plane-induced depth."""

    def test_fronto_parallel(self, vga_intrinsics):
        """Test n = (0, 0, -1), d = 2 gives depth 2 at every pixel."""
        plane = Plane(np.array([0.0, 0.0, -1.0]), 2.0)
        for u in ([320.0, 240.0], [0.0, 0.0], [639.0, 17.0]):
            assert plane_depth_at_pixel(vga_intrinsics, plane, np.array(u)) == pytest.approx(2.0)

    def test_oblique_residual(self, rng, vga_intrinsics):
        """Test the unprojected point lies on an oblique plane."""
        plane = Plane(np.array([0.3, -0.2, -1.0]), 3.0)
        for _ in range(20):
            u = np.array([rng.uniform(0, 640), rng.uniform(0, 480)])
            depth = plane_depth_at_pixel(vga_intrinsics, plane, u)
            x = unproject(vga_intrinsics, u, depth)
            assert abs(plane.residual(x)) < 1e-9

    def test_parallel_ray(self, vga_intrinsics):
        """Test a plane containing the principal ray raises RayParallel."""
        plane = Plane(np.array([1.0, 0.0, 0.0]), 0.5)
        with pytest.raises(RayParallel):
            plane_depth_at_pixel(vga_intrinsics, plane, np.array([320.0, 240.0]))

    def test_plane_behind(self, vga_intrinsics):
        """Test a plane behind the camera raises NegativeDepth."""
        plane = Plane(np.array([0.0, 0.0, 1.0]), 2.0)
        with pytest.raises(NegativeDepth):
            plane_depth_at_pixel(vga_intrinsics, plane, np.array([320.0, 240.0]))

    def test_vectorized_marks_invalid(self, vga_intrinsics):
        """Test plane_depths returns NaN where the ray misses."""
        plane = Plane(np.array([0.0, 1.0, 0.0]), -1.0)  # y = 1, below the camera
        depths = plane_depths(vga_intrinsics, plane, np.array([[320.0, 400.0], [320.0, 100.0]]))
        assert np.isfinite(depths[0])
        assert np.isnan(depths[1])


class TestBilinearSample:
    """Tests for bilinear depth sampling."""

    def test_linear_ramp_exact(self):
        """Test a linear ramp is reproduced exactly with its gradient."""
        ys, xs = np.mgrid[0:10, 0:12]
        depth = DepthMap(1.0 + 0.1 * xs + 0.2 * ys)
        values, valid, grad = bilinear_sample(depth, np.array([[3.25, 4.5]]), with_gradient=True)
        assert valid[0]
        assert values[0] == pytest.approx(1.0 + 0.325 + 0.9)
        np.testing.assert_allclose(grad[0], [0.1, 0.2], atol=1e-12)

    def test_invalid_neighbour(self):
        """Test a sentinel pixel in the neighbourhood invalidates the sample."""
        values = np.ones((5, 5))
        values[2, 3] = 0.0
        _, valid, _ = bilinear_sample(DepthMap(values), np.array([[2.5, 2.5], [0.5, 0.5]]))
        assert not valid[0]
        assert valid[1]

    def test_outside_image(self):
        """Test coordinates outside the image are invalid."""
        _, valid, _ = bilinear_sample(DepthMap(np.ones((5, 5))), np.array([[-0.5, 1.0], [4.5, 1.0]]))
        assert not valid.any()


# =====================
# Error Measure Tests
# =====================

class TestErrors:
    """Tests for rotation_angle and translation_distance."""

    def test_identical(self, random_pose):
        """Test identical rotations are 0° apart."""
        assert rotation_angle(random_pose.rotation, random_pose.rotation) == pytest.approx(0.0, abs=1e-5)

    def test_quarter_turn(self):
        """Test a 90° z-rotation is 90° from the identity."""
        assert rotation_angle(RZ90, np.eye(3)) == pytest.approx(90.0)

    def test_axis_angle(self, rng):
        """Test a constructed axis-angle rotation reports its angle."""
        for _ in range(10):
            theta = rng.uniform(0.01, 3.0)
            R = Rotation.from_rotvec(theta * random_unit_vectors(rng, 1)[0]).as_matrix()
            assert math.radians(rotation_angle(R, np.eye(3))) == pytest.approx(theta, abs=1e-7)

    def test_small_angle_resolved(self, rng):
        """Test angles near zero are resolved well below 1e-9 rad."""
        for theta in (1e-12, 1e-10, 1e-8):
            R = Rotation.from_rotvec(theta * random_unit_vectors(rng, 1)[0]).as_matrix()
            assert math.radians(rotation_angle(R, np.eye(3))) == pytest.approx(theta, abs=1e-13)

    def test_translation_distance(self):
        """Test the Euclidean distance in meters."""
        assert translation_distance(np.zeros(3), np.array([3.0, 4.0, 0.0])) == pytest.approx(5.0)

    def test_look_at_axes(self):
        """Test look_at points z forward and y down."""
        pose = look_at(np.zeros(3), np.array([0.0, 1.0, 0.0]))
        np.testing.assert_allclose(pose.rotation[:, 2], [0.0, 1.0, 0.0], atol=1e-12)
        np.testing.assert_allclose(pose.rotation[:, 1], [0.0, 0.0, -1.0], atol=1e-12)
