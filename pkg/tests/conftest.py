"""Shared synthetic fixtures: a small RGB-D sequence with one moving object."""
from __future__ import annotations

import numpy as np
import pytest

from rgbdlabel import (
    Box3D,
    BoxTrack,
    Camera,
    CameraIntrinsics,
    CameraRig,
    DistortionCoeffs,
    ExtrinsicTransform,
)
from rgbdlabel import pngio
from rgbdlabel.project import AnnotationProject, FrameRef, ProjectConfig, save_project

FRAME_W, FRAME_H = 64, 48
N_FRAMES = 8


def make_intrinsics(width=FRAME_W, height=FRAME_H, f=60.0):
    return CameraIntrinsics(fx=f, fy=f, cx=width / 2.0, cy=height / 2.0,
                            width=width, height=height)


def make_rig(distortion=None) -> CameraRig:
    d = distortion or DistortionCoeffs()
    return CameraRig(
        rgb=Camera(make_intrinsics(), d),
        depth=Camera(make_intrinsics(), d),
        rgb_from_depth=ExtrinsicTransform.identity(),
    )


def make_box(frame, center, track_id="obj1", size=(0.4, 0.4, 0.4),
             quat=(1.0, 0.0, 0.0, 0.0), occlusion=0.0, label="cube") -> Box3D:
    return Box3D(
        center=np.asarray(center, dtype=float),
        size=np.asarray(size, dtype=float),
        orientation=np.asarray(quat, dtype=float),
        frame_index=frame,
        track_id=track_id,
        class_label=label,
        occlusion=occlusion,
    )


def render_frame(t: float) -> tuple[np.ndarray, np.ndarray]:
    """Blue scene with a red square sliding right; depth plane with a bump."""
    rgb = np.zeros((FRAME_H, FRAME_W, 3), np.uint8)
    rgb[:, :] = (20, 30, 200)
    x0 = int(10 + 20 * t)
    rgb[16:32, x0 : x0 + 16] = (210, 40, 30)
    depth = np.full((FRAME_H, FRAME_W), 2000, np.uint16)
    depth[16:32, x0 : x0 + 16] = 1200
    depth[0, 0] = 0  # one invalid pixel
    return rgb, depth


@pytest.fixture
def rig() -> CameraRig:
    return make_rig()


@pytest.fixture
def project_dir(tmp_path):
    """A saved minimal project with frames on disk and one 2-keyframe track."""
    root = tmp_path / "proj"
    (root / "frames").mkdir(parents=True)
    frames = []
    for i in range(N_FRAMES):
        rgb, depth = render_frame(i / (N_FRAMES - 1))
        rgb_rel = f"frames/rgb_{i:06d}.png"
        depth_rel = f"frames/depth_{i:06d}.png"
        pngio.write_rgb(root / rgb_rel, rgb)
        pngio.write_depth(root / depth_rel, depth)
        frames.append(FrameRef(rgb_rel, depth_rel))
    project = AnnotationProject(
        root=root, frames=frames, rig=make_rig(), config=ProjectConfig()
    )
    track = BoxTrack("obj1", "cube")
    track.add_keyframe(make_box(0, (-0.3, 0.0, 2.0)))
    track.add_keyframe(make_box(N_FRAMES - 1, (0.3, 0.0, 2.0)))
    project.tracks["obj1"] = track
    save_project(project)
    return root
