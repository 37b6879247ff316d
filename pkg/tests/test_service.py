import json
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import pytest
from fastapi.testclient import TestClient

from siftsvc import RasterImage, __version__, save_pgm
from siftsvc.cli import main as cli_main
from siftsvc.service import ServiceLimits, create_app

TEXTURE = Path(__file__).parent / "data" / "texture_256.pgm"


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app(), raise_server_exceptions=False)


@pytest.fixture(scope="module")
def texture_bytes():
    return TEXTURE.read_bytes()


def uniform_pgm_bytes(size=48, value=0.5):
    return save_pgm(RasterImage.from_array(np.full((size, size), value)))


def detect_files(data):
    return {"image": ("img.pgm", data, "application/octet-stream")}


def match_files(a, b):
    return {
        "image_a": ("a.pgm", a, "application/octet-stream"),
        "image_b": ("b.pgm", b, "application/octet-stream"),
    }


class TestHealth:
    def test_ok(self, client):
        resp = client.get("/health")
        assert resp.status_code == 200
        doc = resp.json()
        assert doc["status"] == "ok"
        assert doc["version"] == __version__

    def test_small_body(self, client):
        assert len(client.get("/health").content) < 1024


class TestDetect:
    def test_uniform_gray_zero_keypoints(self, client):
        resp = client.post("/v1/detect", files=detect_files(uniform_pgm_bytes()))
        assert resp.status_code == 200
        doc = resp.json()
        assert doc["keypoints"] == []
        assert doc["image_width"] == 48
        assert "X-Timing-Ms" in resp.headers

    def test_texture_has_keypoints(self, client, texture_bytes):
        resp = client.post("/v1/detect", files=detect_files(texture_bytes))
        doc = resp.json()
        assert len(doc["keypoints"]) > 100
        assert len(doc["descriptors"]) == len(doc["keypoints"])
        assert all(len(d) == 128 for d in doc["descriptors"][:3])

    def test_parameters_echoed(self, client, texture_bytes):
        resp = client.post(
            "/v1/detect",
            files=detect_files(texture_bytes),
            data={"contrast_threshold": "0.06", "upsample": "false"},
        )
        params = resp.json()["parameters"]
        assert params["contrast_threshold"] == 0.06
        assert params["upsample"] is False
        assert params["sigma0"] == 1.6

    def test_one_byte_body_malformed(self, client):
        resp = client.post("/v1/detect", files=detect_files(b"x"))
        assert resp.status_code == 400
        doc = resp.json()
        assert doc["code"] == "malformed-image"
        assert "message" in doc

    def test_missing_part(self, client):
        resp = client.post("/v1/detect", data={"sigma0": "1.6"})
        assert resp.status_code == 400
        assert resp.json()["code"] == "missing-part"

    def test_parameter_out_of_range(self, client, texture_bytes):
        resp = client.post(
            "/v1/detect",
            files=detect_files(texture_bytes),
            data={"contrast_threshold": "-2"},
        )
        assert resp.status_code == 422
        assert resp.json()["code"] == "parameter-out-of-range"

    def test_parameter_unparseable(self, client, texture_bytes):
        resp = client.post(
            "/v1/detect",
            files=detect_files(texture_bytes),
            data={"sigma0": "huge"},
        )
        assert resp.status_code == 422

    def test_payload_too_large(self):
        app = create_app(limits=ServiceLimits(max_upload_bytes=64))
        local = TestClient(app)
        resp = local.post("/v1/detect", files=detect_files(uniform_pgm_bytes()))
        assert resp.status_code == 413
        assert resp.json()["code"] == "payload-too-large"

    def test_image_dimensions_too_large(self):
        app = create_app(limits=ServiceLimits(max_pixels_per_side=16))
        local = TestClient(app)
        resp = local.post("/v1/detect", files=detect_files(uniform_pgm_bytes(32)))
        assert resp.status_code == 413

    def test_deterministic_bodies(self, client, texture_bytes):
        first = client.post("/v1/detect", files=detect_files(texture_bytes)).content
        second = client.post("/v1/detect", files=detect_files(texture_bytes)).content
        assert first == second

    def test_unknown_precision_rejected(self, client, texture_bytes):
        resp = client.post(
            "/v1/detect?precision=nope", files=detect_files(texture_bytes)
        )
        assert resp.status_code == 422
        assert resp.json()["code"] == "parameter-out-of-range"


class TestCliParity:
    def run_cli(self, capsysbinary, *args):
        assert cli_main(list(args)) == 0
        return capsysbinary.readouterr().out

    @pytest.mark.parametrize("precision", ["g6", "full"])
    def test_detect_body_matches_cli(self, client, texture_bytes, capsysbinary, precision):
        cli_out = self.run_cli(
            capsysbinary, "detect", str(TEXTURE), "--format", "json",
            "--precision", precision,
        )
        resp = client.post(f"/v1/detect?precision={precision}", files=detect_files(texture_bytes))
        assert resp.content == cli_out

    def test_detect_with_overrides_matches_cli(self, client, texture_bytes, capsysbinary):
        cli_out = self.run_cli(
            capsysbinary, "detect", str(TEXTURE), "--format", "json",
            "--contrast_threshold", "0.05", "--no-upsample",
        )
        resp = client.post(
            "/v1/detect",
            files=detect_files(texture_bytes),
            data={"contrast_threshold": "0.05", "upsample": "false"},
        )
        assert resp.content == cli_out

    def test_match_body_matches_cli(self, client, texture_bytes, capsysbinary):
        cli_out = self.run_cli(
            capsysbinary, "match", str(TEXTURE), str(TEXTURE), "--format", "json",
        )
        resp = client.post("/v1/match", files=match_files(texture_bytes, texture_bytes))
        assert resp.content == cli_out


class TestMatch:
    def test_self_match(self, client, texture_bytes):
        resp = client.post("/v1/match", files=match_files(texture_bytes, texture_bytes))
        assert resp.status_code == 200
        doc = resp.json()
        assert doc["image_a"]["keypoints"] == doc["image_b"]["keypoints"]
        assert doc["matches"]
        for m in doc["matches"]:
            assert m["index_a"] == m["index_b"]
            assert m["distance"] == 0.0

    def test_ratio_zero(self, client, texture_bytes):
        resp = client.post(
            "/v1/match",
            files=match_files(texture_bytes, texture_bytes),
            data={"ratio_threshold": "0"},
        )
        assert resp.json()["matches"] == []

    def test_bad_ratio(self, client, texture_bytes):
        resp = client.post(
            "/v1/match",
            files=match_files(texture_bytes, texture_bytes),
            data={"ratio_threshold": "1.5"},
        )
        assert resp.status_code == 422

    def test_malformed_part_named(self, client, texture_bytes):
        resp = client.post("/v1/match", files=match_files(texture_bytes, b"junk"))
        assert resp.status_code == 400
        doc = resp.json()
        assert doc["code"] == "malformed-image"
        assert "image_b" in doc["message"]


class TestConcurrency:
    def test_16_identical_requests_identical_bodies(self, texture_bytes):
        app = create_app(workers=4)
        local = TestClient(app)

        def call(_):
            return local.post("/v1/detect", files=detect_files(texture_bytes)).content

        with ThreadPoolExecutor(max_workers=16) as pool:
            bodies = list(pool.map(call, range(16)))
        assert len(set(bodies)) == 1
        assert json.loads(bodies[0])["keypoints"]


class TestStatic:
    def test_serves_client_files(self, tmp_path):
        (tmp_path / "index.html").write_text("<html><body>client</body></html>")
        app = create_app(static_dir=tmp_path)
        local = TestClient(app)
        resp = local.get("/")
        assert resp.status_code == 200
        assert b"client" in resp.content
        # API still reachable alongside the static mount
        assert local.get("/health").status_code == 200

    def test_no_static_dir_no_root(self):
        local = TestClient(create_app(), raise_server_exceptions=False)
        assert local.get("/").status_code == 404
