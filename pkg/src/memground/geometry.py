"""SE(3) poses, rotation constructors, boxes, and 3D IoU.

World convention used by every module: OpenCV-style right-handed axes with
+Y pointing down (along gravity), so the horizontal plane is spanned by X
and Z.  Heights above the floor therefore decrease the Y coordinate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

ORTHONORMAL_TOL = 1e-9

GRAVITY_AXIS = np.array([0.0, 1.0, 0.0])
GRAVITY_AXIS.setflags(write=False)
# Indices of the horizontal (X, Z) components of a world vector.
HORIZONTAL_AXES = (0, 2)


class EmptyInputError(ValueError):
    """Raised when an operation requires a non-empty input."""


def _check_rotation(rotation: np.ndarray, what: str = "rotation") -> np.ndarray:
    rotation = np.ascontiguousarray(rotation, dtype=float)
    if rotation.shape != (3, 3):
        raise ValueError(f"{what} must be 3x3, got shape {rotation.shape}")
    if not np.allclose(rotation @ rotation.T, np.eye(3), atol=1e-8, rtol=0.0):
        raise ValueError(f"{what} is not orthonormal")
    if abs(float(np.linalg.det(rotation)) - 1.0) > 1e-8:
        raise ValueError(f"{what} must be proper (determinant +1)")
    rotation.setflags(write=False)
    return rotation


def _check_vec3(v: np.ndarray, what: str) -> np.ndarray:
    v = np.ascontiguousarray(v, dtype=float).reshape(3)
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{what} must be finite")
    v.setflags(write=False)
    return v


@dataclass(frozen=True, eq=False)
class Pose:
    """Rigid world-from-camera transform.

    ``rotation`` maps camera-frame vectors into the world frame and
    ``translation`` is the camera origin in world coordinates (meters).
    Camera axes follow OpenCV: X right, Y down, Z forward.
    """

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "rotation", _check_rotation(self.rotation, "pose rotation"))
        object.__setattr__(self, "translation", _check_vec3(self.translation, "pose translation"))

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.eye(3), np.zeros(3))

    def compose(self, other: "Pose") -> "Pose":
        """Return self ∘ other (apply ``other`` in this pose's frame)."""
        return Pose(self.rotation @ other.rotation,
                    self.rotation @ other.translation + self.translation)

    def inverse(self) -> "Pose":
        rt = self.rotation.T
        return Pose(rt, -(rt @ self.translation))

    def transform_points(self, points: np.ndarray) -> np.ndarray:
        """Map (N, 3) camera-frame points into the world frame."""
        pts = np.asarray(points, dtype=float)
        return pts @ self.rotation.T + self.translation

    @property
    def local_x(self) -> np.ndarray:
        return self.rotation[:, 0]

    @property
    def local_y(self) -> np.ndarray:
        return self.rotation[:, 1]

    @property
    def local_z(self) -> np.ndarray:
        """Camera forward direction in world coordinates."""
        return self.rotation[:, 2]


@dataclass(frozen=True, eq=False)
class Box3D:
    """Oriented 3D box: center, strictly-positive half extents, rotation.

    An identity rotation means axis-aligned; evaluation boxes must be
    axis-aligned.
    """

    center: np.ndarray
    half_extents: np.ndarray
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", _check_vec3(self.center, "box center"))
        he = np.ascontiguousarray(self.half_extents, dtype=float).reshape(3)
        if not np.all(he > 0.0):
            raise ValueError(f"box half_extents must be strictly positive, got {he}")
        he.setflags(write=False)
        object.__setattr__(self, "half_extents", he)
        object.__setattr__(self, "rotation", _check_rotation(self.rotation, "box rotation"))

    @property
    def is_axis_aligned(self) -> bool:
        return bool(np.allclose(self.rotation, np.eye(3), atol=1e-9, rtol=0.0))

    @property
    def volume(self) -> float:
        return float(8.0 * np.prod(self.half_extents))

    def corners(self) -> np.ndarray:
        """Return the 8 world-frame corners, shape (8, 3)."""
        signs = np.array([[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)],
                         dtype=float)
        return (signs * self.half_extents) @ self.rotation.T + self.center

    def world_aabb(self) -> "Box3D":
        """Smallest axis-aligned box enclosing this (possibly oriented) box."""
        ext = np.abs(self.rotation) @ self.half_extents
        return Box3D(self.center, ext)

    def contains(self, points: np.ndarray, tol: float = 0.0) -> np.ndarray:
        pts = (np.asarray(points, dtype=float) - self.center) @ self.rotation
        return np.all(np.abs(pts) <= self.half_extents + tol, axis=-1)


def rotation_about_axis(axis: np.ndarray, angle: float) -> np.ndarray:
    """Proper rotation of ``angle`` radians about a unit ``axis`` (Rodrigues)."""
    axis = np.asarray(axis, dtype=float).reshape(3)
    if abs(float(np.linalg.norm(axis)) - 1.0) > 1e-9:
        raise ValueError("rotation axis must have unit norm")
    kx, ky, kz = axis
    k_cross = np.array([[0.0, -kz, ky],
                        [kz, 0.0, -kx],
                        [-ky, kx, 0.0]])
    c, s = math.cos(angle), math.sin(angle)
    return c * np.eye(3) + s * k_cross + (1.0 - c) * np.outer(axis, axis)


def geodesic_angle(rotation_a: np.ndarray, rotation_b: np.ndarray) -> float:
    """Rotation angle in [0, pi] between two proper rotations.

    Uses the trace of the relative rotation; the arccos argument is clamped
    to [-1, 1] because the formula is numerically unstable near 0 and pi.
    """
    ra = _check_rotation(rotation_a, "rotation_a")
    rb = _check_rotation(rotation_b, "rotation_b")
    # trace(Ra^T Rb) written as an elementwise sum, which makes the result
    # bitwise symmetric in its arguments.
    trace = float(np.sum(ra * rb))
    return math.acos(min(1.0, max(-1.0, (trace - 1.0) / 2.0)))


def box_diagonal(box: Box3D) -> float:
    """Full corner-to-corner diagonal length: 2 * ||half_extents||."""
    return float(2.0 * np.linalg.norm(box.half_extents))


def iou3d_aabb(box_a: Box3D, box_b: Box3D) -> float:
    """Intersection-over-union of two axis-aligned boxes; 0 when disjoint."""
    for name, box in (("box_a", box_a), ("box_b", box_b)):
        if not box.is_axis_aligned:
            raise ValueError(f"{name} must be axis-aligned for IoU evaluation")
    lo = np.maximum(box_a.center - box_a.half_extents, box_b.center - box_b.half_extents)
    hi = np.minimum(box_a.center + box_a.half_extents, box_b.center + box_b.half_extents)
    edges = hi - lo
    if np.any(edges <= 0.0):
        return 0.0
    inter = float(np.prod(edges))
    union = box_a.volume + box_b.volume - inter
    return inter / union


def aabb_of_points(points: np.ndarray, min_half_extent: float = 1e-4) -> Box3D:
    """Minimal axis-aligned box of a point set.

    Degenerate axes (single point or planar cloud) are padded to
    ``min_half_extent`` so downstream volume math stays well defined.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    if pts.size == 0:
        raise EmptyInputError("cannot bound an empty point set")
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    center = (lo + hi) / 2.0
    half = np.maximum((hi - lo) / 2.0, min_half_extent)
    return Box3D(center, half)
