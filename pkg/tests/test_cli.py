import json
import signal
import socket
import subprocess
import sys
import time
import urllib.request
from pathlib import Path

import numpy as np
import pytest

from siftsvc import RasterImage, save_pgm
from siftsvc.cli import main

TEXTURE = Path(__file__).parent / "data" / "texture_256.pgm"


@pytest.fixture()
def uniform_pgm(tmp_path):
    path = tmp_path / "uniform.pgm"
    path.write_bytes(save_pgm(RasterImage.from_array(np.full((48, 48), 0.5))))
    return str(path)


class TestDetect:
    def test_uniform_json(self, uniform_pgm, capsysbinary):
        assert main(["detect", uniform_pgm, "--format", "json"]) == 0
        out = capsysbinary.readouterr().out
        doc = json.loads(out)
        assert doc["keypoints"] == []
        assert doc["descriptors"] == []
        assert doc["image_width"] == 48
        assert doc["parameters"]["sigma0"] == 1.6

    def test_lowe_header(self, capsysbinary):
        assert main(["detect", str(TEXTURE), "--format", "lowe"]) == 0
        out = capsysbinary.readouterr().out.decode()
        first = out.splitlines()[0].split()
        assert first[1] == "128"
        assert int(first[0]) > 0

    def test_output_file_and_overlay(self, tmp_path, capsysbinary):
        out_json = tmp_path / "kp.json"
        overlay = tmp_path / "overlay.ppm"
        rc = main(
            ["detect", str(TEXTURE), "--output", str(out_json), "--overlay", str(overlay)]
        )
        assert rc == 0
        assert json.loads(out_json.read_bytes())["image_height"] == 256
        assert overlay.read_bytes().startswith(b"P6\n256 256\n255\n")

    def test_flags_echoed_in_parameters(self, uniform_pgm, capsysbinary):
        rc = main(
            [
                "detect", uniform_pgm,
                "--contrast_threshold", "0.05",
                "--no-upsample",
                "--scales_per_octave", "4",
            ]
        )
        assert rc == 0
        doc = json.loads(capsysbinary.readouterr().out)
        assert doc["parameters"]["contrast_threshold"] == 0.05
        assert doc["parameters"]["upsample"] is False
        assert doc["parameters"]["scales_per_octave"] == 4

    def test_missing_file_exits_1(self, capsysbinary):
        assert main(["detect", "/nonexistent/image.pgm"]) == 1

    def test_undecodable_file_exits_1(self, tmp_path):
        bad = tmp_path / "bad.pgm"
        bad.write_bytes(b"not an image at all")
        assert main(["detect", str(bad)]) == 1

    def test_bad_flag_value_exits_2(self, uniform_pgm):
        assert main(["detect", uniform_pgm, "--contrast_threshold", "-0.5"]) == 2

    def test_unknown_flag_exits_2(self, uniform_pgm):
        with pytest.raises(SystemExit) as err:
            main(["detect", uniform_pgm, "--bogus"])
        assert err.value.code == 2

    def test_blob_grid_count_matches_oracle_chain(self, tmp_path, capsysbinary):
        # reported count equals the brute-force extrema scan pushed through
        # the refinement, dedup, and orientation stages
        from oracles import blob_grid, brute_force_extrema

        from siftsvc import ScaleSpaceConfig
        from siftsvc.features import assign_orientations, compute_gradients
        from siftsvc.scalespace import (
            Keypoint,
            Rejection,
            build_dog_pyramid,
            build_gaussian_pyramid,
            refine_extremum,
        )
        from siftsvc.pipeline import _dedupe

        pixels, _, _ = blob_grid()
        image = RasterImage.from_array(pixels)
        path = tmp_path / "grid.pgm"
        path.write_bytes(save_pgm(image))

        assert main(["detect", str(path), "--format", "json"]) == 0
        doc = json.loads(capsysbinary.readouterr().out)

        config = ScaleSpaceConfig()
        loaded = RasterImage.from_array(
            np.frombuffer(path.read_bytes().split(b"\n255\n", 1)[1], dtype=np.uint8)
            .astype(float)
            .reshape(200, 200)
            / 255.0
        )
        gp = build_gaussian_pyramid(loaded, config)
        dp = build_dog_pyramid(gp)
        raw = brute_force_extrema(dp.octaves, config.contrast_threshold, config.border)
        survivors = [
            kp
            for kp in (refine_extremum(dp, loc, config) for loc in raw)
            if isinstance(kp, Keypoint)
        ]
        expected = 0
        for kp in _dedupe(survivors):
            gf = compute_gradients(
                gp.octaves[kp.octave][kp.level],
                octave=kp.octave,
                level_index=kp.level,
                pixel_scale=gp.pixel_scale(kp.octave),
            )
            expected += len(assign_orientations(kp, gf))
        assert len(doc["keypoints"]) == expected


class TestMatch:
    def test_self_match_zero_distance_rows(self, capsysbinary):
        assert main(["match", str(TEXTURE), str(TEXTURE)]) == 0
        rows = capsysbinary.readouterr().out.decode().splitlines()
        assert rows
        for row in rows:
            index_a, index_b, dist, ratio = row.split("\t")
            assert index_a == index_b
            assert float(dist) == 0.0
            assert float(ratio) == 0.0

    def test_ratio_zero_matches_nothing(self, capsysbinary):
        assert main(["match", str(TEXTURE), str(TEXTURE), "--ratio", "0.0"]) == 0
        assert capsysbinary.readouterr().out == b""

    def test_ratio_monotonic_subset(self, capsysbinary):
        main(["match", str(TEXTURE), str(TEXTURE), "--ratio", "0.6"])
        tight = set(capsysbinary.readouterr().out.decode().splitlines())
        main(["match", str(TEXTURE), str(TEXTURE), "--ratio", "0.8"])
        loose = set(capsysbinary.readouterr().out.decode().splitlines())
        assert {r.split("\t")[0] for r in tight} <= {r.split("\t")[0] for r in loose}

    def test_json_format_and_overlay(self, tmp_path, capsysbinary):
        overlay = tmp_path / "match.ppm"
        rc = main(
            ["match", str(TEXTURE), str(TEXTURE), "--format", "json", "--overlay", str(overlay)]
        )
        assert rc == 0
        doc = json.loads(capsysbinary.readouterr().out)
        assert doc["image_a"]["keypoints"] == doc["image_b"]["keypoints"]
        assert doc["parameters"]["ratio_threshold"] == 0.8
        assert len(doc["matches"]) > 0
        assert overlay.read_bytes().startswith(b"P6\n512 256\n")

    def test_bad_ratio_exits_2(self):
        assert main(["match", str(TEXTURE), str(TEXTURE), "--ratio", "1.5"]) == 2


class TestServe:
    def test_ephemeral_port_health_and_graceful_sigint(self):
        proc = subprocess.Popen(
            [sys.executable, "-m", "siftsvc.cli", "serve", "--port", "0"],
            stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL,
            text=True,
        )
        try:
            line = proc.stdout.readline().strip()
            assert line.startswith("listening on http://")
            port = int(line.rsplit(":", 1)[1])
            deadline = time.monotonic() + 1.0
            healthy = False
            while time.monotonic() < deadline:
                try:
                    with urllib.request.urlopen(
                        f"http://127.0.0.1:{port}/health", timeout=0.5
                    ) as resp:
                        healthy = resp.status == 200
                    break
                except OSError:
                    time.sleep(0.02)
            assert healthy, "health endpoint not reachable within 1 s"
        finally:
            proc.send_signal(signal.SIGINT)
            rc = proc.wait(timeout=10)
        assert rc == 0

    def test_port_in_use_exits_1(self):
        blocker = socket.create_server(("127.0.0.1", 0))
        port = blocker.getsockname()[1]
        try:
            rc = subprocess.run(
                [sys.executable, "-m", "siftsvc.cli", "serve", "--port", str(port)],
                stdout=subprocess.DEVNULL,
                stderr=subprocess.DEVNULL,
                timeout=15,
            ).returncode
        finally:
            blocker.close()
        assert rc == 1
