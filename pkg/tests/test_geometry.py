"""Geometry kernel tests: rotation constructors, geodesic angles, boxes, IoU."""

from __future__ import annotations

import math

import numpy as np
import pytest

from memground.geometry import (
    Box3D,
    EmptyInputError,
    GRAVITY_AXIS,
    Pose,
    aabb_of_points,
    box_diagonal,
    geodesic_angle,
    iou3d_aabb,
    rotation_about_axis,
)

X = np.array([1.0, 0.0, 0.0])
Y = np.array([0.0, 1.0, 0.0])
Z = np.array([0.0, 0.0, 1.0])


def rodrigues_oracle(axis, angle, vec):
    """Brute-force Rodrigues rotation of a single vector: independent of the
    matrix constructor under test."""
    axis = np.asarray(axis, dtype=float)
    vec = np.asarray(vec, dtype=float)
    return (vec * math.cos(angle)
            + np.cross(axis, vec) * math.sin(angle)
            + axis * np.dot(axis, vec) * (1.0 - math.cos(angle)))


def axis_angle_oracle(rotation):
    """Rotation angle via quaternion extraction (no trace/arccos involved)."""
    r = np.asarray(rotation, dtype=float)
    qw = 0.5 * math.sqrt(max(0.0, 1.0 + r[0, 0] + r[1, 1] + r[2, 2]))
    qv = 0.5 * np.sqrt(np.maximum(0.0, 1.0 + np.array([
        r[0, 0] - r[1, 1] - r[2, 2],
        r[1, 1] - r[0, 0] - r[2, 2],
        r[2, 2] - r[0, 0] - r[1, 1],
    ])))
    return 2.0 * math.atan2(float(np.linalg.norm(qv)), qw)


def random_rotation(rng):
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    return rotation_about_axis(axis, rng.uniform(0.0, math.pi))


def voxel_iou_oracle_mm(box_a: Box3D, box_b: Box3D) -> float:
    """Brute-force IoU on a 1 mm voxel grid.

    Counts voxel centers axis by axis; for boxes whose faces lie on whole
    millimeters the count is exact (no partially covered voxels).
    """
    def axis_counts(lo_mm, hi_mm):
        # voxel k covers [k, k+1) mm; its center is inside [lo, hi] iff
        # lo <= k + 0.5 <= hi
        return np.maximum(0, np.round(hi_mm).astype(int) - np.round(lo_mm).astype(int))

    lo_a = np.round((box_a.center - box_a.half_extents) * 1000.0)
    hi_a = np.round((box_a.center + box_a.half_extents) * 1000.0)
    lo_b = np.round((box_b.center - box_b.half_extents) * 1000.0)
    hi_b = np.round((box_b.center + box_b.half_extents) * 1000.0)
    vol_a = int(np.prod(axis_counts(lo_a, hi_a)))
    vol_b = int(np.prod(axis_counts(lo_b, hi_b)))
    inter = int(np.prod(axis_counts(np.maximum(lo_a, lo_b), np.minimum(hi_a, hi_b))))
    union = vol_a + vol_b - inter
    return inter / union if union else 0.0


def random_mm_box(rng) -> Box3D:
    """Axis-aligned box whose corners lie on whole millimeters."""
    center_mm = rng.integers(-1000, 1000, size=3)
    half_mm = rng.integers(20, 600, size=3)
    return Box3D(center_mm / 1000.0, half_mm / 1000.0)


class TestRotationAboutAxis:
    def test_zero_angle_is_identity(self):
        np.testing.assert_allclose(rotation_about_axis(Y, 0.0), np.eye(3), atol=1e-12)

    def test_half_turn_about_y_flips_x(self):
        r = rotation_about_axis(Y, math.pi)
        np.testing.assert_allclose(r @ X, -X, atol=1e-12)

    def test_matches_rodrigues_oracle(self):
        rng = np.random.default_rng(7)
        r = rotation_about_axis(Y, math.pi / 2)
        np.testing.assert_allclose(r @ Z, rodrigues_oracle(Y, math.pi / 2, Z), atol=1e-12)
        for _ in range(200):
            axis = rng.normal(size=3)
            axis /= np.linalg.norm(axis)
            angle = rng.uniform(-2 * math.pi, 2 * math.pi)
            vec = rng.normal(size=3)
            np.testing.assert_allclose(
                rotation_about_axis(axis, angle) @ vec,
                rodrigues_oracle(axis, angle, vec),
                atol=1e-10,
            )

    def test_non_unit_axis_rejected(self):
        with pytest.raises(ValueError):
            rotation_about_axis(np.array([0.0, 2.0, 0.0]), 0.1)


class TestGeodesicAngle:
    def test_identity_pair_is_zero(self):
        assert geodesic_angle(np.eye(3), np.eye(3)) == 0.0

    def test_quarter_turn(self):
        r = rotation_about_axis(Y, math.pi / 2)
        assert geodesic_angle(np.eye(3), r) == pytest.approx(math.pi / 2, abs=1e-12)

    def test_left_invariance_against_axis_angle_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            r = random_rotation(rng)
            axis = rng.normal(size=3)
            axis /= np.linalg.norm(axis)
            step = rotation_about_axis(axis, 0.3)
            assert geodesic_angle(r, r @ step) == pytest.approx(0.3, abs=1e-9)
            assert axis_angle_oracle(step) == pytest.approx(0.3, abs=1e-9)

    def test_matches_axis_angle_oracle_on_random_pairs(self):
        rng = np.random.default_rng(13)
        for _ in range(1000):
            ra, rb = random_rotation(rng), random_rotation(rng)
            expected = axis_angle_oracle(ra.T @ rb)
            assert geodesic_angle(ra, rb) == pytest.approx(expected, abs=1e-9)

    def test_symmetric_and_in_range(self):
        rng = np.random.default_rng(17)
        for _ in range(100):
            ra, rb = random_rotation(rng), random_rotation(rng)
            ang = geodesic_angle(ra, rb)
            assert 0.0 <= ang <= math.pi
            assert geodesic_angle(rb, ra) == ang

    def test_conjugation_invariance(self):
        rng = np.random.default_rng(19)
        for _ in range(100):
            ra, rb, q = random_rotation(rng), random_rotation(rng), random_rotation(rng)
            assert geodesic_angle(q @ ra @ q.T, q @ rb @ q.T) == pytest.approx(
                geodesic_angle(ra, rb), abs=1e-9)

    def test_identity_vs_rotation_equals_axis_angle_magnitude(self):
        rng = np.random.default_rng(23)
        for _ in range(100):
            r = random_rotation(rng)
            assert geodesic_angle(np.eye(3), r) == pytest.approx(axis_angle_oracle(r), abs=1e-9)


class TestBoxes:
    def test_unit_cube_diagonal(self):
        assert box_diagonal(Box3D(np.zeros(3), [0.5, 0.5, 0.5])) == pytest.approx(
            math.sqrt(3.0), abs=1e-9)

    def test_degenerate_half_extent_rejected(self):
        with pytest.raises(ValueError):
            Box3D(np.zeros(3), [1.0, 0.0, 1.0])

    def test_diagonal_direct_arithmetic(self):
        # 2 * sqrt(1 + 4 + 4) = 6
        assert box_diagonal(Box3D(np.zeros(3), [1.0, 2.0, 2.0])) == pytest.approx(6.0, abs=1e-12)

    def test_world_aabb_of_rotated_box(self):
        r = rotation_about_axis(Y, math.pi / 4)
        aabb = Box3D(np.zeros(3), [1.0, 1.0, 1.0], r).world_aabb()
        np.testing.assert_allclose(aabb.half_extents, [math.sqrt(2), 1.0, math.sqrt(2)],
                                   atol=1e-12)


class TestIoU:
    def test_identical_boxes(self):
        b = Box3D(np.zeros(3), [0.5, 0.5, 0.5])
        assert iou3d_aabb(b, b) == 1.0

    def test_disjoint_boxes(self):
        a = Box3D(np.zeros(3), [0.5, 0.5, 0.5])
        b = Box3D([5.0, 0.0, 0.0], [0.5, 0.5, 0.5])
        assert iou3d_aabb(a, b) == 0.0

    def test_half_shift_along_x(self):
        a = Box3D(np.zeros(3), [0.5, 0.5, 0.5])
        b = Box3D([0.5, 0.0, 0.0], [0.5, 0.5, 0.5])
        assert iou3d_aabb(a, b) == pytest.approx(1.0 / 3.0, abs=1e-12)
        assert voxel_iou_oracle_mm(a, b) == pytest.approx(1.0 / 3.0, abs=1e-12)

    def test_rotated_box_rejected(self):
        a = Box3D(np.zeros(3), [0.5, 0.5, 0.5])
        b = Box3D(np.zeros(3), [0.5, 0.5, 0.5], rotation_about_axis(Y, 0.3))
        with pytest.raises(ValueError):
            iou3d_aabb(a, b)

    def test_matches_voxel_oracle_on_random_pairs(self):
        rng = np.random.default_rng(29)
        for _ in range(100):
            a, b = random_mm_box(rng), random_mm_box(rng)
            assert iou3d_aabb(a, b) == pytest.approx(voxel_iou_oracle_mm(a, b), abs=1e-3)


class TestAabbOfPoints:
    def test_two_point_case(self):
        box = aabb_of_points(np.array([[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]]))
        np.testing.assert_allclose(box.center, [0.5, 0.5, 0.5])
        np.testing.assert_allclose(box.half_extents, [0.5, 0.5, 0.5])

    def test_single_point_padded(self):
        box = aabb_of_points(np.array([[1.0, 2.0, 3.0]]))
        np.testing.assert_allclose(box.center, [1.0, 2.0, 3.0])
        np.testing.assert_allclose(box.half_extents, [1e-4, 1e-4, 1e-4])

    def test_empty_cloud_rejected(self):
        with pytest.raises(EmptyInputError):
            aabb_of_points(np.zeros((0, 3)))

    def test_matches_minmax_scan_oracle(self):
        rng = np.random.default_rng(31)
        pts = rng.uniform(-1.0, 1.0, size=(1000, 3))
        box = aabb_of_points(pts)
        lo = np.array([min(p[i] for p in pts) for i in range(3)])
        hi = np.array([max(p[i] for p in pts) for i in range(3)])
        np.testing.assert_allclose(box.center, (lo + hi) / 2, atol=1e-12)
        np.testing.assert_allclose(box.half_extents, (hi - lo) / 2, atol=1e-12)


class TestPose:
    def test_compose_with_inverse_is_identity(self):
        rng = np.random.default_rng(37)
        for _ in range(50):
            p = Pose(random_rotation(rng), rng.normal(size=3))
            ident = p.compose(p.inverse())
            np.testing.assert_allclose(ident.rotation, np.eye(3), atol=1e-9)
            np.testing.assert_allclose(ident.translation, np.zeros(3), atol=1e-9)

    def test_composition_associative(self):
        rng = np.random.default_rng(41)
        for _ in range(50):
            a, b, c = (Pose(random_rotation(rng), rng.normal(size=3)) for _ in range(3))
            left = a.compose(b).compose(c)
            right = a.compose(b.compose(c))
            np.testing.assert_allclose(left.rotation, right.rotation, atol=1e-9)
            np.testing.assert_allclose(left.translation, right.translation, atol=1e-9)

    def test_transform_points_roundtrip(self):
        rng = np.random.default_rng(43)
        p = Pose(random_rotation(rng), rng.normal(size=3))
        pts = rng.normal(size=(20, 3))
        back = p.inverse().transform_points(p.transform_points(pts))
        np.testing.assert_allclose(back, pts, atol=1e-9)

    def test_gravity_axis_is_world_y_down(self):
        np.testing.assert_array_equal(GRAVITY_AXIS, [0.0, 1.0, 0.0])
