"""Project persistence: validation, atomic saves, locking, export."""
import hashlib
import json

import numpy as np
import pytest

import rgbdlabel.project as project_mod
from rgbdlabel.errors import (
    InvalidCalibration,
    MaskConflict,
    MissingFile,
    NothingToExport,
    SchemaVersionUnsupported,
    WriterLockHeld,
)
from rgbdlabel.project import (
    AnnotationProject,
    export_annotations,
    load_project,
    save_project,
    writer_lock,
)
from rgbdlabel.segmentation import InstanceMask
from conftest import FRAME_H, FRAME_W, N_FRAMES, make_box


def file_hashes(paths):
    return [hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(paths)]


class TestLoadProject:
    def test_minimal_project_loads(self, project_dir):
        project = load_project(project_dir)
        assert project.frame_count() == N_FRAMES
        assert "obj1" in project.tracks
        assert project.load_rgb(0).shape == (FRAME_H, FRAME_W, 3)
        assert project.load_depth(0).values.dtype == np.uint16

    def test_missing_frame_file_is_named(self, project_dir):
        (project_dir / "frames" / "rgb_000003.png").unlink()
        with pytest.raises(MissingFile, match="rgb_000003.png"):
            load_project(project_dir)

    def test_improper_rotation_rejected(self, project_dir):
        calib = json.loads((project_dir / "calibration.json").read_text())
        calib["rgb_from_depth"]["rotation"] = [[1, 0, 0], [0, 1, 0], [0, 0, -1]]
        (project_dir / "calibration.json").write_text(json.dumps(calib))
        with pytest.raises(InvalidCalibration):
            load_project(project_dir)

    def test_unknown_format_version(self, project_dir):
        doc = json.loads((project_dir / "project.json").read_text())
        doc["format_version"] = 99
        (project_dir / "project.json").write_text(json.dumps(doc))
        with pytest.raises(SchemaVersionUnsupported):
            load_project(project_dir)


class TestSaveRoundTrip:
    def test_lossless_numeric_round_trip(self, project_dir):
        project = load_project(project_dir)
        # inject awkward full-precision values
        project.tracks["obj1"].set_keyframe(
            make_box(3, (0.1 + 1e-16, np.pi, 1 / 3), occlusion=0.1234567890123456)
        )
        project.epsilon = 0.07000000000000001
        save_project(project)
        again = load_project(project_dir)
        b1 = project.tracks["obj1"].keyframes[3]
        b2 = again.tracks["obj1"].keyframes[3]
        assert np.array_equal(b1.center, b2.center)
        assert np.array_equal(b1.orientation, b2.orientation)
        assert b1.occlusion == b2.occlusion
        assert again.epsilon == project.epsilon

    def test_mask_round_trip(self, project_dir):
        project = load_project(project_dir)
        m = np.zeros((FRAME_H, FRAME_W), bool)
        m[10:20, 15:25] = True
        project.masks.add(InstanceMask("obj1", 2, "rgb", m), "cube")
        save_project(project)
        again = load_project(project_dir)
        got = again.masks.get(2, "rgb", "obj1")
        assert got is not None and np.array_equal(got.mask, m)

    def test_interrupted_save_preserves_previous(self, project_dir, monkeypatch):
        project = load_project(project_dir)
        before = (project_dir / "annotations.json").read_bytes()
        project.tracks["obj1"].set_keyframe(make_box(5, (9, 9, 9)))

        import os as _os

        real_replace = _os.replace

        def explode(src, dst):
            if str(dst).endswith("annotations.json"):
                raise OSError("disk full")
            return real_replace(src, dst)

        monkeypatch.setattr(project_mod.os, "replace", explode)
        with pytest.raises(Exception):
            save_project(project)
        monkeypatch.undo()
        assert (project_dir / "annotations.json").read_bytes() == before
        reloaded = load_project(project_dir)
        assert 5 not in reloaded.tracks["obj1"].keyframes

    def test_second_writer_blocked(self, project_dir):
        project = load_project(project_dir)
        with writer_lock(project_dir):
            with pytest.raises(WriterLockHeld):
                save_project(project)
        save_project(project)  # lock released

    def test_mask_conflict(self, project_dir):
        project = load_project(project_dir)
        m = InstanceMask("obj1", 0, "rgb", np.zeros((FRAME_H, FRAME_W), bool))
        project.masks.add(m, "cube")
        with pytest.raises(MaskConflict):
            project.masks.add(m, "cube")


class TestExport:
    def test_flat_export_row_count(self, project_dir):
        project = load_project(project_dir)
        paths = export_annotations(project, "flat_per_frame")
        rows = paths[0].read_text().strip().splitlines()
        assert len(rows) == 1 + N_FRAMES  # header + one row per spanned frame

    def test_eleven_rows_for_ten_frame_gap(self, tmp_path, project_dir):
        project = load_project(project_dir)
        track = project.tracks["obj1"]
        track.remove_keyframe(N_FRAMES - 1)
        track.set_keyframe(make_box(10, (0.3, 0, 2.0)))
        paths = export_annotations(project, "flat_per_frame", tmp_path / "out")
        rows = paths[0].read_text().strip().splitlines()
        assert len(rows) == 1 + 11

    def test_empty_project_raises(self, project_dir):
        project = load_project(project_dir)
        project.tracks.clear()
        with pytest.raises(NothingToExport):
            export_annotations(project, "flat_per_frame")
        with pytest.raises(NothingToExport):
            export_annotations(project, "masks_png")

    def test_reexport_byte_identical(self, project_dir, tmp_path):
        project = load_project(project_dir)
        m = np.zeros((FRAME_H, FRAME_W), bool)
        m[5:9, 5:9] = True
        project.masks.add(InstanceMask("obj1", 1, "rgb", m), "cube")
        a = export_annotations(project, "flat_per_frame", tmp_path / "a")
        b = export_annotations(project, "flat_per_frame", tmp_path / "b")
        assert file_hashes(a) == file_hashes(b)
        ma = export_annotations(project, "masks_png", tmp_path / "ma")
        mb = export_annotations(project, "masks_png", tmp_path / "mb")
        assert file_hashes(ma) == file_hashes(mb)

    def test_flat_rows_include_visibility_columns(self, project_dir):
        project = load_project(project_dir)
        paths = export_annotations(project, "flat_per_frame")
        header, first = paths[0].read_text().splitlines()[:2]
        cols = header.split(",")
        row = first.split(",")
        assert {"truncation", "visibility", "difficulty"} <= set(cols)
        t = float(row[cols.index("truncation")])
        v = float(row[cols.index("visibility")])
        o = float(row[cols.index("occlusion")])
        assert v == pytest.approx((1 - t) * (1 - o))
