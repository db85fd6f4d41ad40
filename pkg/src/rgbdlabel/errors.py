"""Exception hierarchy shared by all engine modules.

Every engine failure derives from :class:`AnnotationError` so callers (CLI,
HTTP service) can map engine errors to exit codes / status codes uniformly.
"""
from __future__ import annotations


class AnnotationError(Exception):
    """Base class for all engine errors."""


# --- camera geometry -------------------------------------------------------

class PointBehindCamera(AnnotationError):
    """3D point has non-positive depth and cannot be projected."""


class NoConvergence(AnnotationError):
    """Iterative undistortion failed to converge (extreme coefficients)."""


class DegenerateDistortion(AnnotationError):
    """Distortion collapses the valid image region to zero area."""


class DimensionMismatch(AnnotationError):
    """Raster dimensions disagree with the camera model or each other."""


class InvalidRotation(AnnotationError):
    """Matrix is not a proper rotation (orthonormal, det +1)."""


class NoCalibration(AnnotationError):
    """Operation requires a calibrated camera rig that is not available."""


# --- box tracks -------------------------------------------------------------

class TrackConflict(AnnotationError):
    """Track already holds a keyframe at the target frame."""


class TooFewKeyframes(AnnotationError):
    """Interpolation needs at least two keyframes."""


class NonUnitQuaternion(AnnotationError):
    """Quaternion norm is not 1 within tolerance."""


class OutOfRange(AnnotationError):
    """Scalar argument outside its documented range."""


class AllCornersBehindCamera(AnnotationError):
    """Every box corner is behind the camera; nothing to project."""


class GimbalLockWarning(UserWarning):
    """Pitch within tolerance of +/- pi/2; yaw/roll split is ambiguous."""


# --- segmentation -----------------------------------------------------------

class EmptyRect(AnnotationError):
    """Region-of-interest rectangle is empty or outside the frame."""


class AllOneLabel(AnnotationError):
    """Trimap leaves no pixels of one class; the cut is unconstrained."""


class SingularGmm(AnnotationError):
    """Mixture fitting failed even after covariance regularization."""


class ModalityMismatch(AnnotationError):
    """Masks from different modalities or frames cannot be combined."""


class DegenerateView(AnnotationError):
    """Viewer projection matrix is not invertible."""


class EmptyRange(AnnotationError):
    """Depth colormap range has min >= max."""


class MaskConflict(AnnotationError):
    """A mask for this (frame, modality, instance) already exists."""


# --- metrics ----------------------------------------------------------------

class NonPositiveSize(AnnotationError):
    """Box size has a non-positive component."""


class EmptyTruth(AnnotationError):
    """Ground-truth document contains no annotations."""


# --- project store ----------------------------------------------------------

class MissingFile(AnnotationError):
    """A file referenced by the project manifest does not exist."""


class SchemaVersionUnsupported(AnnotationError):
    """On-disk document carries an unknown format_version."""


class InvalidCalibration(AnnotationError):
    """Calibration document fails validation."""


class IoFailure(AnnotationError):
    """Filesystem write failed; previous project state is untouched."""


class WriterLockHeld(AnnotationError):
    """Another writer holds the project lock."""


class NothingToExport(AnnotationError):
    """Project has no annotations or masks to export."""
