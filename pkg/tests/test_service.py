"""HTTP endpoint contracts: revisions, read-your-writes, error mapping."""
import io

import numpy as np
import pytest
from fastapi.testclient import TestClient
from PIL import Image

from rgbdlabel.project import load_project
from rgbdlabel.server import create_app, rle_decode, rle_encode


@pytest.fixture
def client(project_dir):
    app = create_app(load_project(project_dir))
    with TestClient(app) as c:
        yield c


def rev(client) -> int:
    return client.get("/project").json()["revision"]


BOX = {
    "center": [0.0, 0.0, 2.0],
    "size": [0.4, 0.4, 0.4],
    "quaternion": [1.0, 0.0, 0.0, 0.0],
    "occlusion": 0.0,
}


class TestRle:
    def test_round_trip(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            m = rng.random((13, 7)) > 0.5
            assert np.array_equal(rle_decode(rle_encode(m)), m)

    def test_empty_and_full(self):
        z = np.zeros((4, 4), bool)
        o = np.ones((4, 4), bool)
        assert np.array_equal(rle_decode(rle_encode(z)), z)
        assert np.array_equal(rle_decode(rle_encode(o)), o)


class TestProjectEndpoints:
    def test_project_summary(self, client):
        doc = client.get("/project").json()
        assert doc["frame_count"] == 8
        assert doc["tracks"] == ["obj1"]

    def test_frame_images(self, client):
        r = client.get("/frames/0/rgb")
        assert r.status_code == 200 and r.headers["content-type"] == "image/png"
        img = np.array(Image.open(io.BytesIO(r.content)))
        assert img.shape == (48, 64, 3)
        d = client.get("/frames/0/depth")
        depth = np.array(Image.open(io.BytesIO(d.content)))
        assert depth.dtype == np.uint16

    def test_unknown_frame_404(self, client):
        assert client.get("/frames/99/rgb").status_code == 404

    def test_cloud_decimation(self, client):
        full = client.get("/frames/0/cloud").json()
        capped = client.get("/frames/0/cloud", params={"cap": 100}).json()
        assert full["total"] == 64 * 48 - 1  # one invalid pixel in the fixture
        assert len(capped["points"]) <= 100 + 64
        assert len(full["points"]) == full["total"]

    def test_save_endpoint(self, client, project_dir):
        r = client.post("/project/save")
        assert r.status_code == 200 and r.json()["saved"]


class TestTrackEndpoints:
    def test_create_and_list(self, client):
        r = client.post(
            "/tracks",
            json={"track_id": "new1", "class_label": "mug", "revision": rev(client)},
        )
        assert r.status_code == 201
        tracks = client.get("/tracks").json()["tracks"]
        assert {t["track_id"] for t in tracks} == {"obj1", "new1"}

    def test_duplicate_track_is_422(self, client):
        r = client.post(
            "/tracks",
            json={"track_id": "obj1", "class_label": "cube", "revision": rev(client)},
        )
        assert r.status_code == 422
        assert r.json()["error"] == "TrackConflict"

    def test_stale_revision_409(self, client):
        r = client.post(
            "/tracks", json={"track_id": "x", "class_label": "y", "revision": 999}
        )
        assert r.status_code == 409

    def test_replay_original_revision_conflicts(self, client):
        body = {"track_id": "z1", "class_label": "c", "revision": rev(client)}
        assert client.post("/tracks", json=body).status_code == 201
        replay = client.post("/tracks", json=body)
        assert replay.status_code == 409

    def test_patch_then_interpolate_reflects_edit(self, client):
        r = client.patch(
            "/tracks/obj1/keyframes/4",
            json={**BOX, "center": [5.0, 0.0, 2.0], "revision": rev(client)},
        )
        assert r.status_code == 200
        boxes = client.post("/tracks/obj1/interpolate").json()["boxes"]
        by_frame = {b["frame"]: b for b in boxes}
        assert by_frame[4]["center"][0] == 5.0
        assert by_frame[4]["is_keyframe"] is True

    def test_keyframe_conflict_maps_to_422(self, client):
        r = client.post(
            "/tracks/obj1/keyframes/0", json={**BOX, "revision": rev(client)}
        )
        assert r.status_code == 422
        assert r.json()["error"] == "TrackConflict"

    def test_delete_keyframe_and_track(self, client):
        client.post("/tracks/obj1/keyframes/3", json={**BOX, "revision": rev(client)})
        r = client.delete("/tracks/obj1/keyframes/3", params={"revision": rev(client)})
        assert r.status_code == 200
        r = client.delete("/tracks/obj1", params={"revision": rev(client)})
        assert r.status_code == 200
        assert client.get("/tracks/obj1").status_code == 404

    def test_interpolation_payload(self, client):
        doc = client.post("/tracks/obj1/interpolate").json()
        assert len(doc["boxes"]) == 8
        assert doc["gap_modes"] == ["linear"]
        b = doc["boxes"][3]
        assert {"truncation", "visibility", "difficulty"} <= set(b)

    def test_projection_endpoint(self, client):
        doc = client.get("/tracks/obj1/projection/0").json()
        assert len(doc["corners"]) == 8
        x0, y0, x1, y1 = doc["rect"]
        assert x0 < x1 and y0 < y1

    def test_validation_error_maps_to_422(self, client):
        bad = {**BOX, "quaternion": [2.0, 0, 0, 0], "revision": rev(client)}
        r = client.patch("/tracks/obj1/keyframes/2", json=bad)
        assert r.status_code == 422
        assert r.json()["error"] == "NonUnitQuaternion"


class TestWorldOrigin:
    def test_set_world_origin_shifts_projection(self, client):
        before = client.get("/tracks/obj1/projection/0").json()["rect"]
        r = client.post(
            "/calibration/world-origin",
            json={
                "rotation": [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
                "translation": [0.0, 0.0, -0.5],
                "revision": rev(client),
            },
        )
        assert r.status_code == 200
        after = client.get("/tracks/obj1/projection/0").json()["rect"]
        assert before != after

    def test_invalid_rotation_is_422(self, client):
        r = client.post(
            "/calibration/world-origin",
            json={
                "rotation": [[1, 0, 0], [0, 1, 0], [0, 0, -1]],
                "translation": [0, 0, 0],
                "revision": rev(client),
            },
        )
        assert r.status_code == 422
        assert r.json()["error"] == "InvalidRotation"


def segment_session(client, frame=0, rect=(8, 14, 28, 34), modality="rgb"):
    r = client.post(
        "/segment/init",
        json={
            "frame": frame,
            "track_id": "obj1",
            "modality": modality,
            "rect": list(rect),
            "padding": 6,
            "revision": rev(client),
        },
    )
    assert r.status_code == 200
    return r.json()


class TestSegmentation:
    def test_init_and_iterate(self, client):
        session = segment_session(client)
        r = client.post(
            "/segment/iterate",
            json={"key": session["key"], "revision": rev(client)},
        )
        assert r.status_code == 200
        doc = r.json()
        mask = rle_decode(doc["mask"])
        assert mask.any()
        assert doc["energy"]

    def test_iterate_with_scribbles_energy_monotone(self, client):
        session = segment_session(client)
        first = client.post(
            "/segment/iterate", json={"key": session["key"], "revision": rev(client)}
        ).json()
        scribble = {
            "points": [[2.0, 2.0], [6.0, 2.0]],
            "radius": 1.5,
            "label": "background",
        }
        second = client.post(
            "/segment/iterate",
            json={"key": session["key"], "scribbles": [scribble], "revision": rev(client)},
        ).json()
        assert second["energy"][-1] <= first["energy"][0] * (1 + 1e-6) + 1e-9
        # scribbled pixels are hard background in the published mask
        mask = rle_decode(second["mask"])
        assert not mask[2, 2] and not mask[2, 6]

    def test_unknown_session_404(self, client):
        r = client.post("/segment/iterate", json={"key": "9:none:rgb", "revision": rev(client)})
        assert r.status_code == 404

    def test_select3d_and_commit(self, client):
        view = np.eye(4).tolist()
        proj = np.diag([0.02, 0.02, 0.1, 1.0]).tolist()  # wide ortho view
        r = client.post(
            "/segment/select3d",
            json={
                "frame": 0,
                "track_id": "obj1",
                "view": view,
                "projection": proj,
                "rect": [0, 0, 200, 200],
                "mode": "add",
                "viewport": [200, 200],
                "commit": True,
                "revision": rev(client),
            },
        )
        assert r.status_code == 200
        doc = r.json()
        assert len(doc["selected"]) > 0
        mask = rle_decode(doc["mask"])
        assert mask.sum() == len(doc["selected"])
        # remove with the same rect empties the selection
        r2 = client.post(
            "/segment/select3d",
            json={
                "frame": 0,
                "track_id": "obj1",
                "view": view,
                "projection": proj,
                "rect": [0, 0, 200, 200],
                "mode": "remove",
                "viewport": [200, 200],
                "revision": rev(client),
            },
        )
        assert r2.json()["selected"] == []

    def test_seed_from_depth_roundtrip(self, client):
        # commit a depth mask from 3D selection, then seed the rgb session
        view = np.eye(4).tolist()
        proj = np.diag([0.02, 0.02, 0.1, 1.0]).tolist()
        client.post(
            "/segment/select3d",
            json={
                "frame": 0,
                "track_id": "obj1",
                "view": view,
                "projection": proj,
                "rect": [0, 0, 200, 200],
                "mode": "add",
                "viewport": [200, 200],
                "commit": True,
                "revision": rev(client),
            },
        )
        session = segment_session(client)
        r = client.post(
            "/segment/seed-from-depth",
            json={"key": session["key"], "revision": rev(client)},
        )
        assert r.status_code == 200
        assert r.json()["seeded"] > 0

    def test_depth_modality_session(self, client):
        session = segment_session(client, rect=(20, 14, 44, 34), modality="depth")
        r = client.post(
            "/segment/iterate", json={"key": session["key"], "revision": rev(client)}
        )
        assert r.status_code == 200
        assert rle_decode(r.json()["mask"]).any()


class TestEvaluateEndpoint:
    def test_self_evaluation_perfect(self, client, project_dir):
        truth = (project_dir / "annotations.json").read_text()
        import json as _json

        r = client.post("/evaluate", json={"truth": _json.loads(truth)})
        assert r.status_code == 200
        report = r.json()["report"]
        assert report["boxes"]["ate"] == 0.0
        assert report["boxes"]["coverage"] == 1.0
        assert "boxes" in r.json()["text"]
