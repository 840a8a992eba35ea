"""Memory-driven 3D visual grounding: simulator, agent, and benchmark harness."""

from memground.geometry import (
    Box3D,
    EmptyInputError,
    Pose,
    aabb_of_points,
    box_diagonal,
    geodesic_angle,
    iou3d_aabb,
    rotation_about_axis,
)

__version__ = "0.1.0"

__all__ = [
    "Box3D",
    "EmptyInputError",
    "Pose",
    "aabb_of_points",
    "box_diagonal",
    "geodesic_angle",
    "iou3d_aabb",
    "rotation_about_axis",
    "__version__",
]
