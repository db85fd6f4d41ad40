"""Projection, backprojection, and rigid-transform contracts."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rgbdlabel import (
    CameraIntrinsics,
    DepthMap,
    ExtrinsicTransform,
    PointCloud,
    backproject_depth,
    project_point,
    transform_points,
)
from rgbdlabel.calib import project_points, validate_rotation
from rgbdlabel.errors import DimensionMismatch, InvalidRotation, PointBehindCamera


@pytest.fixture
def intr():
    return CameraIntrinsics(fx=100.0, fy=100.0, cx=50.0, cy=50.0, width=100, height=100)


class TestProjectPoint:
    def test_optical_axis_hits_principal_point(self, intr):
        assert np.allclose(project_point([0, 0, 1], intr), [50, 50])

    def test_unit_offset(self, intr):
        assert np.allclose(project_point([1, 0, 1], intr), [150, 50])

    def test_behind_camera_raises(self, intr):
        with pytest.raises(PointBehindCamera):
            project_point([0, 0, -1], intr)
        with pytest.raises(PointBehindCamera):
            project_point([0, 0, 0], intr)

    def test_may_fall_outside_image(self, intr):
        px = project_point([5, 0, 1], intr)
        assert px[0] > intr.width  # caller clips


class TestIntrinsicsValidation:
    def test_rejects_nonpositive_focal(self):
        with pytest.raises(ValueError):
            CameraIntrinsics(fx=0, fy=100, cx=50, cy=50, width=100, height=100)

    def test_rejects_principal_point_outside(self):
        with pytest.raises(ValueError):
            CameraIntrinsics(fx=10, fy=10, cx=120, cy=50, width=100, height=100)


class TestBackprojection:
    def test_principal_point_pixel(self, intr):
        values = np.zeros((100, 100), np.uint16)
        values[50, 50] = 1000
        cloud = backproject_depth(DepthMap(values), intr)
        assert len(cloud) == 1
        assert np.allclose(cloud.points[0], [0.0, 0.0, 1.0])
        assert tuple(cloud.source_pixels[0]) == (50, 50)

    def test_empty_depth_gives_empty_cloud(self, intr):
        cloud = backproject_depth(DepthMap(np.zeros((100, 100), np.uint16)), intr)
        assert len(cloud) == 0

    def test_offset_pixel(self):
        intr = CameraIntrinsics(fx=10.0, fy=10.0, cx=50.0, cy=50.0, width=100, height=100)
        values = np.zeros((100, 100), np.uint16)
        values[50, 60] = 2000  # col = cx + fx
        cloud = backproject_depth(DepthMap(values), intr)
        assert np.allclose(cloud.points[0], [2.0, 0.0, 2.0])

    def test_dimension_mismatch(self, intr):
        with pytest.raises(DimensionMismatch):
            backproject_depth(DepthMap(np.zeros((10, 10), np.uint16)), intr)

    def test_round_trip_recovers_pixel_centers(self, intr):
        rng = np.random.default_rng(3)
        values = rng.integers(100, 5000, size=(100, 100)).astype(np.uint16)
        values[rng.random((100, 100)) < 0.3] = 0
        cloud = backproject_depth(DepthMap(values), intr)
        px = project_points(cloud.points, intr)
        expected = cloud.source_pixels[:, ::-1].astype(float)  # (col, row)
        assert np.max(np.abs(px - expected)) < 1e-6


class TestExtrinsicTransform:
    def test_identity(self):
        cloud = PointCloud([[1.0, 2.0, 3.0]], [[0, 0]])
        out = transform_points(cloud, ExtrinsicTransform.identity())
        assert np.allclose(out.points, cloud.points)

    def test_pure_translation(self):
        xf = ExtrinsicTransform(np.eye(3), [1.0, 0.0, 0.0])
        out = transform_points(PointCloud([[0, 0, 1]], [[0, 0]]), xf)
        assert np.allclose(out.points[0], [1, 0, 1])

    def test_90_degree_yaw(self):
        c, s = np.cos(np.pi / 2), np.sin(np.pi / 2)
        rot = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])
        xf = ExtrinsicTransform(rot, np.zeros(3))
        out = transform_points(PointCloud([[1, 0, 0]], [[0, 0]]), xf)
        # matrix-product oracle
        assert np.allclose(out.points[0], rot @ np.array([1.0, 0, 0]), atol=1e-12)
        assert np.allclose(out.points[0], [0, 1, 0], atol=1e-12)

    def test_rejects_improper_rotation(self):
        flip = np.diag([1.0, 1.0, -1.0])
        with pytest.raises(InvalidRotation):
            ExtrinsicTransform(flip, np.zeros(3))
        with pytest.raises(InvalidRotation):
            validate_rotation(np.eye(3) * 2.0)

    @settings(max_examples=50, deadline=None)
    @given(
        angles=st.tuples(*[st.floats(-np.pi, np.pi) for _ in range(3)]),
        t=st.tuples(*[st.floats(-5, 5) for _ in range(3)]),
        p=st.tuples(*[st.floats(-10, 10) for _ in range(3)]),
    )
    def test_inverse_round_trip(self, angles, t, p):
        from rgbdlabel import EulerAngles, euler_to_quaternion
        from rgbdlabel.boxes import quat_to_matrix

        rot = quat_to_matrix(euler_to_quaternion(EulerAngles(*angles)))
        xf = ExtrinsicTransform(rot, np.array(t))
        cloud = PointCloud([p], [[0, 0]])
        back = transform_points(transform_points(cloud, xf), xf.inverse())
        assert np.max(np.abs(back.points - cloud.points)) < 1e-9

    def test_source_pixels_preserved(self):
        xf = ExtrinsicTransform(np.eye(3), [0.1, 0.2, 0.3])
        cloud = PointCloud([[1, 2, 3], [4, 5, 6]], [[7, 8], [9, 10]])
        out = transform_points(cloud, xf)
        assert np.array_equal(out.source_pixels, cloud.source_pixels)


class TestDepthMap:
    def test_zero_is_invalid(self):
        dm = DepthMap(np.array([[0, 5]], np.uint16))
        assert dm.valid_mask.tolist() == [[False, True]]

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            DepthMap(np.array([[70000]], np.int64))
