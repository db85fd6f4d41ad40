"""Semi-automatic annotation engine for RGB-D video sequences.

Provides pixel-preserving undistortion, keyframed 6-DoF box tracks with
hybrid linear/cubic interpolation and quaternion slerp, GrabCut-style
instance segmentation for RGB and color-mapped depth, annotation quality
metrics, a versioned on-disk project store, a batch CLI, and an HTTP
service for interactive front ends.
"""
from . import errors
from .boxes import (
    Box3D,
    BoxTrack,
    DEFAULT_EPSILON,
    EulerAngles,
    VisibilityInfo,
    categorize_difficulty,
    classify_segments,
    compute_truncation,
    copy_box,
    euler_to_quaternion,
    interpolate_track,
    project_box,
    quaternion_to_euler,
    slerp_orientation,
    visibility,
)
from .calib import (
    Camera,
    CameraIntrinsics,
    CameraRig,
    DepthMap,
    DistortionCoeffs,
    ExtrinsicTransform,
    PointCloud,
    backproject_depth,
    project_point,
    transform_points,
)
from .undistort import (
    compute_optimal_camera_matrix,
    distort_point,
    distort_points,
    undistort_depth,
    undistort_point,
    undistort_points,
    undistort_rgb,
)

__version__ = "0.1.0"

__all__ = [
    "Box3D",
    "BoxTrack",
    "Camera",
    "CameraIntrinsics",
    "CameraRig",
    "DEFAULT_EPSILON",
    "DepthMap",
    "DistortionCoeffs",
    "EulerAngles",
    "ExtrinsicTransform",
    "PointCloud",
    "VisibilityInfo",
    "backproject_depth",
    "categorize_difficulty",
    "classify_segments",
    "compute_optimal_camera_matrix",
    "compute_truncation",
    "copy_box",
    "distort_point",
    "distort_points",
    "errors",
    "euler_to_quaternion",
    "interpolate_track",
    "project_box",
    "project_point",
    "quaternion_to_euler",
    "slerp_orientation",
    "transform_points",
    "undistort_depth",
    "undistort_point",
    "undistort_points",
    "undistort_rgb",
    "visibility",
]
