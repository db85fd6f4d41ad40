"""Mask/box metrics against counting oracles and constructed perturbations."""
import numpy as np
import pytest

from rgbdlabel import BoxTrack, EulerAngles, euler_to_quaternion
from rgbdlabel.boxes import quat_to_matrix
from rgbdlabel.errors import DimensionMismatch, EmptyTruth, InvalidRotation, NonPositiveSize
from rgbdlabel.metrics import (
    ase,
    ate,
    aoe,
    compare_interpolation,
    evaluate_dataset,
    evaluate_mask_pair,
    iou,
    mae,
    render_report,
)
from conftest import make_box


def counting_oracle(a, b):
    """Per-pixel loop: intersection, union, and differing-pixel count."""
    inter = union = diff = 0
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            av, bv = bool(a[i, j]), bool(b[i, j])
            inter += av and bv
            union += av or bv
            diff += av != bv
    return inter, union, diff


class TestIoU:
    def test_identical_nonempty(self):
        m = np.eye(8, dtype=bool)
        assert iou(m, m) == 1.0

    def test_disjoint(self):
        a = np.zeros((4, 4), bool)
        b = np.zeros((4, 4), bool)
        a[0, 0] = True
        b[3, 3] = True
        assert iou(a, b) == 0.0

    def test_shifted_block(self):
        a = np.zeros((20, 20), bool)
        b = np.zeros((20, 20), bool)
        a[0:10, 0:10] = True
        b[0:10, 5:15] = True
        assert iou(a, b) == pytest.approx(50 / 150)

    def test_both_empty_is_one(self):
        e = np.zeros((4, 4), bool)
        assert iou(e, e) == 1.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            iou(np.zeros((2, 2), bool), np.zeros((3, 3), bool))

    def test_matches_counting_oracle_on_random_masks(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            a = rng.random((16, 16)) > 0.6
            b = rng.random((16, 16)) > 0.6
            inter, union, diff = counting_oracle(a, b)
            expected = 1.0 if union == 0 else inter / union
            assert iou(a, b) == expected
            assert mae(a, b) == diff / a.size


class TestMae:
    def test_identical(self):
        m = np.eye(6, dtype=bool)
        assert mae(m, m) == 0.0

    def test_complementary(self):
        a = np.zeros((4, 4), bool)
        assert mae(a, ~a) == 1.0

    def test_quarter_difference(self):
        a = np.zeros((10, 10), bool)
        b = a.copy()
        b[:5, :5] = True  # 25 of 100
        assert mae(a, b) == pytest.approx(0.25)


class TestMaskPairWindow:
    def test_window_is_union_rect(self):
        a = np.zeros((20, 20), bool)
        b = np.zeros((20, 20), bool)
        a[2:6, 3:9] = True
        b[4:8, 5:11] = True
        ev = evaluate_mask_pair(a, b)
        assert ev.window == (6, 8)  # rows 2..8, cols 3..11
        inter, union, diff = counting_oracle(a[2:8, 3:11], b[2:8, 3:11])
        assert ev.mae == pytest.approx(diff / (6 * 8))
        assert ev.iou == pytest.approx(inter / union)


class TestBoxErrors:
    def test_ate_zero_and_345(self):
        a = make_box(0, (0, 0, 0))
        b = make_box(0, (3, 4, 0))
        assert ate(a, a) == 0.0
        assert ate(a, b) == pytest.approx(5.0)
        assert ate(b, a) == ate(a, b)

    def test_ase_equal_sizes(self):
        a = make_box(0, (0, 0, 0), size=(1, 2, 3))
        assert ase(a, a) == 0.0

    def test_ase_doubled_cube(self):
        a = make_box(0, (0, 0, 0), size=(1, 1, 1))
        b = make_box(0, (5, 5, 5), size=(2, 2, 2))
        assert ase(a, b) == pytest.approx(0.875)
        assert ase(b, a) == ase(a, b)

    def test_ase_mixed_axes(self):
        a = make_box(0, (0, 0, 0), size=(1, 2, 3))
        b = make_box(0, (0, 0, 0), size=(2, 1, 3))
        assert ase(a, b) == pytest.approx(0.75)

    def test_ase_rejects_nonpositive(self):
        a = make_box(0, (0, 0, 0))
        bad = make_box(0, (0, 0, 0))
        object.__setattr__(bad, "size", np.array([1.0, -1.0, 1.0]))
        with pytest.raises(NonPositiveSize):
            ase(a, bad)

    def test_aoe_identity(self):
        r = np.eye(3)
        assert aoe(r, r) == 0.0

    def test_aoe_pi_flip(self):
        flip = np.diag([1.0, -1.0, -1.0])  # pi about x
        assert aoe(flip, np.eye(3)) == pytest.approx(np.pi)

    def test_aoe_30_degree_yaw(self):
        r = quat_to_matrix(euler_to_quaternion(EulerAngles(np.pi / 6, 0, 0)))
        assert aoe(r, np.eye(3)) == pytest.approx(np.pi / 6, abs=1e-12)

    def test_aoe_symmetric_and_left_invariant(self):
        ra = quat_to_matrix(euler_to_quaternion(EulerAngles(0.4, 0.2, -0.3)))
        rb = quat_to_matrix(euler_to_quaternion(EulerAngles(-0.8, 0.5, 0.1)))
        g = quat_to_matrix(euler_to_quaternion(EulerAngles(1.0, -0.7, 0.2)))
        assert aoe(ra, rb) == pytest.approx(aoe(rb, ra), abs=1e-12)
        assert aoe(g @ ra, g @ rb) == pytest.approx(aoe(ra, rb), abs=1e-12)

    def test_aoe_rejects_non_rotation(self):
        with pytest.raises(InvalidRotation):
            aoe(np.eye(3) * 2, np.eye(3))

    def test_ate_triangle_inequality(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            a, b, c = (make_box(0, rng.uniform(-5, 5, 3)) for _ in range(3))
            assert ate(a, c) <= ate(a, b) + ate(b, c) + 1e-12


def two_track_docs():
    user = {}
    truth = {}
    for tid, x in (("a", 0.0), ("b", 2.0)):
        ut = BoxTrack(tid, "cube")
        tt = BoxTrack(tid, "cube")
        for f in (0, 4):
            ut.add_keyframe(make_box(f, (x + f * 0.1, 0, 2), track_id=tid))
            tt.add_keyframe(make_box(f, (x + f * 0.1, 0, 2), track_id=tid))
        user[tid] = ut
        truth[tid] = tt
    return user, truth


class TestEvaluateDataset:
    def test_self_evaluation_is_perfect(self):
        user, truth = two_track_docs()
        ev = evaluate_dataset(user, truth)
        assert ev.boxes.ase == 0.0
        assert ev.boxes.ate == 0.0
        assert ev.boxes.aoe == 0.0
        assert ev.boxes.coverage == 1.0

    def test_missing_track_reduces_coverage(self):
        user, truth = two_track_docs()
        del user["b"]
        ev = evaluate_dataset(user, truth)
        assert ev.boxes.coverage == pytest.approx(0.5)

    def test_constructed_translation_perturbation(self):
        user, truth = two_track_docs()
        for track in user.values():
            for f in list(track.keyframes):
                b = track.keyframes[f]
                track.keyframes[f] = make_box(
                    f, np.asarray(b.center) + (0.1, 0, 0), track_id=b.track_id
                )
        ev = evaluate_dataset(user, truth)
        assert ev.boxes.ate == pytest.approx(0.1, abs=1e-12)
        assert ev.boxes.ase == 0.0
        assert ev.boxes.aoe == pytest.approx(0.0, abs=1e-9)

    def test_matching_without_shared_ids(self):
        user, truth = two_track_docs()
        user = {f"user_{k}": BoxTrack(f"user_{k}", "cube") for k in ("a", "b")}
        for (k, x) in (("a", 0.0), ("b", 2.0)):
            for f in (0, 4):
                user[f"user_{k}"].add_keyframe(
                    make_box(f, (x + f * 0.1, 0, 2), track_id=f"user_{k}")
                )
        ev = evaluate_dataset(user, truth)
        assert ev.boxes.coverage == 1.0
        assert ev.boxes.ate == pytest.approx(0.0)
        assert sorted(ev.track_matches) == [("user_a", "a"), ("user_b", "b")]

    def test_empty_truth_raises(self):
        user, _ = two_track_docs()
        with pytest.raises(EmptyTruth):
            evaluate_dataset(user, {})

    def test_mask_evaluation(self):
        user, truth = two_track_docs()
        m = np.zeros((10, 10), bool)
        m[2:5, 2:5] = True
        shifted = np.zeros((10, 10), bool)
        shifted[2:5, 3:6] = True
        user_masks = {(0, "rgb", "a"): m}
        truth_masks = {(0, "rgb", "a"): shifted, (0, "rgb", "b"): m}
        ev = evaluate_dataset(user, truth, user_masks, truth_masks)
        assert ev.masks["rgb"].coverage == pytest.approx(0.5)
        assert 0 < ev.masks["rgb"].iou < 1

    def test_report_renders(self):
        user, truth = two_track_docs()
        text = render_report(evaluate_dataset(user, truth))
        assert "boxes" in text and "Coverage" in text


class TestCompareInterpolation:
    def test_static_truth_all_modes_zero(self):
        track = BoxTrack("t", "cube")
        for f in (0, 5, 10, 15):
            track.add_keyframe(make_box(f, (1, 1, 1), track_id="t"))
        truth = {f: make_box(f, (1, 1, 1), track_id="t") for f in range(16)}
        out = compare_interpolation(track, truth, epsilon=0.05)
        for mode in ("linear", "cubic", "hybrid"):
            assert out[mode]["ate"] == pytest.approx(0.0)

    def test_cubic_trajectory_hybrid_beats_linear(self):
        def pos(f):
            return ((f / 5.0) ** 3 / 8.0, 0.0, 2.0)

        track = BoxTrack("t", "cube")
        for f in range(0, 30, 5):
            track.add_keyframe(make_box(f, pos(f), track_id="t"))
        truth = {f: make_box(f, pos(f), track_id="t") for f in range(30)}
        out = compare_interpolation(track, truth, epsilon=0.05)
        assert out["hybrid"]["ate"] < out["linear"]["ate"]

    def test_stop_then_move_hybrid_beats_cubic_on_static_part(self):
        def pos(f):
            return (0.0, 0.0, 2.0) if f <= 45 else ((f - 45) * 0.2, 0.0, 2.0)

        track = BoxTrack("t", "cube")
        for f in range(0, 65, 5):
            track.add_keyframe(make_box(f, pos(f), track_id="t"))
        truth = {f: make_box(f, pos(f), track_id="t") for f in range(65)}
        static_frames = list(range(0, 46))
        out = compare_interpolation(track, truth, epsilon=0.05, frames=static_frames)
        assert out["hybrid"]["ate"] < out["cubic"]["ate"]
        assert out["hybrid"]["ate"] == pytest.approx(0.0, abs=1e-12)

    def test_truth_gap_raises(self):
        track = BoxTrack("t", "cube")
        track.add_keyframe(make_box(0, (0, 0, 1), track_id="t"))
        track.add_keyframe(make_box(4, (1, 0, 1), track_id="t"))
        with pytest.raises(EmptyTruth):
            compare_interpolation(track, {0: make_box(0, (0, 0, 1), track_id="t")})
