"""Build a small on-disk project for frontend integration tests."""
import math
import sys
from pathlib import Path

import numpy as np

from rgbdlabel import (
    Box3D,
    BoxTrack,
    Camera,
    CameraIntrinsics,
    CameraRig,
    DistortionCoeffs,
    EulerAngles,
    ExtrinsicTransform,
    euler_to_quaternion,
)
from rgbdlabel.boxes import quat_to_matrix
from rgbdlabel import pngio
from rgbdlabel.project import AnnotationProject, FrameRef, ProjectConfig, save_project

W, H, N = 64, 48, 6


def frame(t: float):
    rgb = np.zeros((H, W, 3), np.uint8)
    rgb[:, :] = (20, 30, 200)
    x0 = int(10 + 16 * t)
    rgb[16:32, x0 : x0 + 16] = (210, 40, 30)
    depth = np.full((H, W), 2000, np.uint16)
    depth[16:32, x0 : x0 + 16] = 1200
    return rgb, depth


def main(root: Path) -> None:
    (root / "frames").mkdir(parents=True, exist_ok=True)
    frames = []
    for i in range(N):
        rgb, depth = frame(i / (N - 1))
        rgb_rel = f"frames/rgb_{i:06d}.png"
        depth_rel = f"frames/depth_{i:06d}.png"
        pngio.write_rgb(root / rgb_rel, rgb)
        pngio.write_depth(root / depth_rel, depth)
        frames.append(FrameRef(rgb_rel, depth_rel))

    intr = CameraIntrinsics(fx=60.0, fy=62.0, cx=31.5, cy=23.5, width=W, height=H)
    # a non-trivial rig so client-side transform composition is exercised
    stereo_rot = quat_to_matrix(euler_to_quaternion(EulerAngles(math.radians(3), 0.0, 0.0)))
    origin_rot = quat_to_matrix(
        euler_to_quaternion(EulerAngles(math.radians(10), math.radians(-4), math.radians(2)))
    )
    rig = CameraRig(
        rgb=Camera(intr, DistortionCoeffs()),
        depth=Camera(intr, DistortionCoeffs()),
        rgb_from_depth=ExtrinsicTransform(stereo_rot, np.array([0.05, 0.01, -0.02])),
        world_origin=ExtrinsicTransform(origin_rot, np.array([0.1, -0.05, 0.2])),
    )
    project = AnnotationProject(root=root, frames=frames, rig=rig, config=ProjectConfig())
    track = BoxTrack("obj1", "cube")
    for f, x in ((0, -0.2), (N - 1, 0.2)):
        track.add_keyframe(
            Box3D(
                center=np.array([x, 0.0, 2.0]),
                size=np.array([0.4, 0.4, 0.4]),
                orientation=np.array([1.0, 0.0, 0.0, 0.0]),
                frame_index=f,
                track_id="obj1",
                class_label="cube",
            )
        )
    project.tracks["obj1"] = track
    save_project(project)
    print(root)


if __name__ == "__main__":
    main(Path(sys.argv[1]))
