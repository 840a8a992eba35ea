"""Box-model scenes, the pinhole camera, and a raycasting depth renderer.

Scenes are unions of labeled oriented boxes inside an axis-aligned room
extent.  Rendering raycasts every pixel against all instance boxes plus the
extent shell, producing a depth map and an instance-id map; the id map is the
ground-truth stand-in for RGB.  Reserved ids: -1 background (ray miss),
-2 the room shell (walls/floor/ceiling).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from memground.geometry import Box3D, Pose, geodesic_angle

BACKGROUND_ID = -1
SHELL_ID = -2

SCHEMA_VERSION = 1
DEFAULT_CAMERA_HEIGHT = 1.5

# ScanNet-style camera model: 1296x968 with intrinsics
# (fx, fy, cx, cy) = (1169.6, 1167.1, 646.3, 489.9).


class SceneLoadError(ValueError):
    """Scene pair file violates the schema or its cross-references."""


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics; u = x*fx/z + cx, v = y*fy/z + cy."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self) -> None:
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 < self.cx < self.width and 0 < self.cy < self.height):
            raise ValueError("principal point must lie inside the image")

    def scaled(self, factor: float) -> "CameraIntrinsics":
        """Rescale resolution and intrinsics together by ``factor``."""
        return CameraIntrinsics(self.fx * factor, self.fy * factor,
                                self.cx * factor, self.cy * factor,
                                int(round(self.width * factor)),
                                int(round(self.height * factor)))


FULL_INTRINSICS = CameraIntrinsics(1169.6, 1167.1, 646.3, 489.9, 1296, 968)
# 1/8 working resolution keeps the full suite at desk-scale runtime.
WORKING_INTRINSICS = FULL_INTRINSICS.scaled(1.0 / 8.0)


@dataclass(frozen=True, eq=False)
class ObjectInstance:
    instance_id: int
    class_name: str
    box: Box3D
    correspondence_id: int | None = None


@dataclass(frozen=True, eq=False)
class SceneModel:
    """One scan of a room: labeled oriented boxes inside an extent shell."""

    scene_id: str
    instances: tuple[ObjectInstance, ...]
    extent: Box3D
    camera_height: float = DEFAULT_CAMERA_HEIGHT
    standard_origin: Pose = None  # type: ignore[assignment]

    def __post_init__(self) -> None:
        ids = [inst.instance_id for inst in self.instances]
        if len(ids) != len(set(ids)):
            dup = sorted({i for i in ids if ids.count(i) > 1})
            raise SceneLoadError(f"scene {self.scene_id!r}: duplicate instance_id {dup[0]}")
        if any(i < 0 for i in ids):
            raise SceneLoadError(f"scene {self.scene_id!r}: instance ids must be >= 0")
        if not self.extent.is_axis_aligned:
            raise SceneLoadError(f"scene {self.scene_id!r}: extent must be axis-aligned")
        lo = self.extent.center - self.extent.half_extents
        hi = self.extent.center + self.extent.half_extents
        for inst in self.instances:
            aabb = inst.box.world_aabb()
            if (np.any(aabb.center - aabb.half_extents < lo - 1e-6)
                    or np.any(aabb.center + aabb.half_extents > hi + 1e-6)):
                raise SceneLoadError(
                    f"scene {self.scene_id!r}: instance {inst.instance_id} outside extent")
        if self.standard_origin is None:
            object.__setattr__(self, "standard_origin", self._default_origin())

    def _default_origin(self) -> Pose:
        # Floor centroid at camera height; +Y is down so the floor sits at the
        # maximal-Y face of the extent and height subtracts from y.
        floor_y = float(self.extent.center[1] + self.extent.half_extents[1])
        position = np.array([self.extent.center[0],
                             floor_y - self.camera_height,
                             self.extent.center[2]])
        return Pose(np.eye(3), position)

    def instance(self, instance_id: int) -> ObjectInstance:
        for inst in self.instances:
            if inst.instance_id == instance_id:
                return inst
        raise KeyError(f"scene {self.scene_id!r} has no instance {instance_id}")

    def instances_of_class(self, class_name: str) -> list[ObjectInstance]:
        return [inst for inst in self.instances if inst.class_name == class_name]

    def by_correspondence(self, correspondence_id: int) -> ObjectInstance | None:
        for inst in self.instances:
            if inst.correspondence_id == correspondence_id:
                return inst
        return None


@dataclass(frozen=True, eq=False)
class RenderedFrame:
    """Depth + instance-id maps with the pose and intrinsics that produced them."""

    depth: np.ndarray
    instance_ids: np.ndarray
    pose: Pose
    intrinsics: CameraIntrinsics
    scene_id: str = ""

    def __post_init__(self) -> None:
        self.depth.setflags(write=False)
        self.instance_ids.setflags(write=False)


@dataclass(frozen=True, eq=False)
class MemoryFrame:
    """A stored past observation; frame_id is the capture order."""

    frame: RenderedFrame
    frame_id: int


def _ray_grid(intrinsics: CameraIntrinsics) -> np.ndarray:
    """Camera-frame ray directions with unit Z, shape (H, W, 3).

    Pixel (row v, col u) shoots through image coordinates (u, v); depth is
    the camera-frame Z of the hit, so back-projection with the same (u, v)
    reproduces the hit point exactly.
    """
    us = np.arange(intrinsics.width, dtype=float)
    vs = np.arange(intrinsics.height, dtype=float)
    dx = (us - intrinsics.cx) / intrinsics.fx
    dy = (vs - intrinsics.cy) / intrinsics.fy
    dirs = np.empty((intrinsics.height, intrinsics.width, 3))
    dirs[:, :, 0] = dx[None, :]
    dirs[:, :, 1] = dy[:, None]
    dirs[:, :, 2] = 1.0
    return dirs


def _slab_hit(origin: np.ndarray, dirs: np.ndarray, half: np.ndarray):
    """Ray/AABB slab test in the box frame; box spans [-half, half].

    Returns (t_near, t_far) per ray, with the usual inf conventions for
    axis-parallel rays.
    """
    d = np.where(dirs == 0.0, 1e-300, dirs)
    t1 = (-half - origin) / d
    t2 = (half - origin) / d
    t_near = np.minimum(t1, t2).max(axis=-1)
    t_far = np.maximum(t1, t2).min(axis=-1)
    return t_near, t_far


def render(scene: SceneModel, pose: Pose, intrinsics: CameraIntrinsics) -> RenderedFrame:
    """Raycast a depth + instance-id frame from ``pose``.

    Nearest hit per pixel across all instance boxes; the extent shell is
    rendered backface-only (the exit face), so a camera outside the room
    still sees the interior.  Deterministic for fixed inputs; ties go to the
    lower instance id.
    """
    dirs_cam = _ray_grid(intrinsics)
    dirs_world = dirs_cam @ pose.rotation.T
    origin = pose.translation

    # Shell: the exit intersection with the extent box, when ahead of the camera.
    o_l = origin - scene.extent.center
    t_near, t_far = _slab_hit(o_l, dirs_world, scene.extent.half_extents)
    shell_hit = (t_far >= np.maximum(t_near, 0.0)) & (t_far > 1e-9)
    best_t = np.where(shell_hit, t_far, np.inf)
    best_id = np.where(shell_hit, SHELL_ID, BACKGROUND_ID).astype(np.int32)

    for inst in sorted(scene.instances, key=lambda i: i.instance_id):
        box = inst.box
        o_b = (origin - box.center) @ box.rotation
        d_b = dirs_world @ box.rotation
        t_near, t_far = _slab_hit(o_b, d_b, box.half_extents)
        t_hit = np.where(t_near > 1e-9, t_near, t_far)
        hit = (t_far >= np.maximum(t_near, 0.0)) & (t_hit > 1e-9) & (t_hit < best_t)
        best_t = np.where(hit, t_hit, best_t)
        best_id = np.where(hit, np.int32(inst.instance_id), best_id)

    depth = np.where(np.isfinite(best_t), best_t, 0.0)
    return RenderedFrame(depth=depth, instance_ids=best_id, pose=pose,
                         intrinsics=intrinsics, scene_id=scene.scene_id)


def pixel_to_camera(u, v, depth, intrinsics: CameraIntrinsics) -> np.ndarray:
    """Back-project image coordinates + depth into the camera frame.

    Accepts scalars or equally-shaped arrays; returns (..., 3).
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    depth = np.asarray(depth, dtype=float)
    if np.any(depth <= 0.0):
        raise ValueError("depth must be positive")
    if np.any((u < 0) | (u > intrinsics.width) | (v < 0) | (v > intrinsics.height)):
        raise ValueError("pixel coordinates outside image bounds")
    return np.stack([(u - intrinsics.cx) * depth / intrinsics.fx,
                     (v - intrinsics.cy) * depth / intrinsics.fy,
                     depth], axis=-1)


def camera_to_pixel(points: np.ndarray, intrinsics: CameraIntrinsics) -> np.ndarray:
    """Project camera-frame points to (u, v, depth); inverse of pixel_to_camera."""
    pts = np.asarray(points, dtype=float)
    z = pts[..., 2]
    if np.any(z <= 0.0):
        raise ValueError("points must lie in front of the camera")
    return np.stack([pts[..., 0] * intrinsics.fx / z + intrinsics.cx,
                     pts[..., 1] * intrinsics.fy / z + intrinsics.cy,
                     z], axis=-1)


def instance_mask(frame: RenderedFrame, instance_id: int) -> np.ndarray:
    """Boolean mask of pixels showing ``instance_id``; all-false when absent."""
    return frame.instance_ids == instance_id


def instance_moved(prev: ObjectInstance, curr: ObjectInstance,
                   trans_tol: float = 0.05,
                   rot_tol: float = math.radians(5.0)) -> bool:
    """True when the corresponded instance shifted or turned beyond tolerance."""
    if prev.correspondence_id is None or prev.correspondence_id != curr.correspondence_id:
        raise ValueError("instances are not linked by a correspondence")
    displacement = float(np.linalg.norm(curr.box.center - prev.box.center))
    if displacement > trans_tol:
        return True
    return geodesic_angle(prev.box.rotation, curr.box.rotation) > rot_tol


# ---------------------------------------------------------------------------
# Scene pair file I/O
# ---------------------------------------------------------------------------

def _require(mapping: dict, key: str, path: str):
    if key not in mapping:
        raise SceneLoadError(f"{path}: missing required field {key!r}")
    return mapping[key]


def _box_from_dict(data: dict, path: str) -> Box3D:
    center = _require(data, "center", path)
    half = _require(data, "half_extents", path)
    rot = data.get("rotation_rowmajor", (1, 0, 0, 0, 1, 0, 0, 0, 1))
    try:
        return Box3D(np.asarray(center, dtype=float),
                     np.asarray(half, dtype=float),
                     np.asarray(rot, dtype=float).reshape(3, 3))
    except ValueError as exc:
        raise SceneLoadError(f"{path}: {exc}") from exc


def _scene_from_dict(data: dict, path: str) -> SceneModel:
    scene_id = _require(data, "scene_id", path)
    extent = _box_from_dict(_require(data, "extent", path), f"{path}.extent")
    camera_height = float(data.get("camera_height", DEFAULT_CAMERA_HEIGHT))
    instances = []
    seen_ids: set[int] = set()
    for i, inst in enumerate(_require(data, "instances", path)):
        ipath = f"{path}.instances[{i}]"
        instance_id = int(_require(inst, "instance_id", ipath))
        if instance_id in seen_ids:
            raise SceneLoadError(f"{ipath}: duplicate instance_id {instance_id}")
        seen_ids.add(instance_id)
        corr = inst.get("correspondence_id")
        instances.append(ObjectInstance(
            instance_id=instance_id,
            class_name=str(_require(inst, "class_name", ipath)),
            box=_box_from_dict(inst, ipath),
            correspondence_id=None if corr is None else int(corr),
        ))
    try:
        return SceneModel(scene_id=scene_id, instances=tuple(instances),
                          extent=extent, camera_height=camera_height)
    except SceneLoadError:
        raise
    except ValueError as exc:
        raise SceneLoadError(f"{path}: {exc}") from exc


def _check_correspondences(prev: SceneModel, curr: SceneModel) -> None:
    for side, scene, other in (("prev_scene", prev, curr), ("curr_scene", curr, prev)):
        seen: dict[int, int] = {}
        for inst in scene.instances:
            cid = inst.correspondence_id
            if cid is None:
                continue
            if cid in seen:
                raise SceneLoadError(
                    f"{side}: correspondence_id {cid} used by instances "
                    f"{seen[cid]} and {inst.instance_id}")
            seen[cid] = inst.instance_id
        for cid, iid in seen.items():
            if other.by_correspondence(cid) is None:
                raise SceneLoadError(
                    f"{side}.instances[instance_id={iid}].correspondence_id: "
                    f"{cid} has no match in the paired scan")


def load_scene_pair(path: str | Path) -> tuple[SceneModel, SceneModel]:
    """Load and validate a scene pair file; returns (prev_scene, curr_scene)."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise SceneLoadError(f"cannot read scene pair {path}: {exc}") from exc
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SceneLoadError(f"schema_version: expected {SCHEMA_VERSION}, got {version}")
    prev = _scene_from_dict(_require(data, "prev_scene", "prev_scene"), "prev_scene")
    curr = _scene_from_dict(_require(data, "curr_scene", "curr_scene"), "curr_scene")
    _check_correspondences(prev, curr)
    return prev, curr


def _scene_to_dict(scene: SceneModel) -> dict:
    return {
        "scene_id": scene.scene_id,
        "extent": {
            "center": list(scene.extent.center),
            "half_extents": list(scene.extent.half_extents),
        },
        "camera_height": scene.camera_height,
        "instances": [
            {
                "instance_id": inst.instance_id,
                "class_name": inst.class_name,
                "center": list(inst.box.center),
                "half_extents": list(inst.box.half_extents),
                "rotation_rowmajor": [float(x) for x in inst.box.rotation.reshape(-1)],
                **({"correspondence_id": inst.correspondence_id}
                   if inst.correspondence_id is not None else {}),
            }
            for inst in scene.instances
        ],
    }


def save_scene_pair(path: str | Path, prev: SceneModel, curr: SceneModel) -> None:
    """Write a scene pair file (inverse of load_scene_pair)."""
    _check_correspondences(prev, curr)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "prev_scene": _scene_to_dict(prev),
        "curr_scene": _scene_to_dict(curr),
    }
    Path(path).write_text(json.dumps(payload, indent=1), encoding="utf-8")
