import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image

from siftsvc import (
    MalformedImageError,
    RasterImage,
    UnsupportedFormatError,
    ZeroDimensionError,
    load_image,
    render_keypoints,
    render_matches,
    save_pgm,
)
from siftsvc.imageio import InvalidMatchError
from siftsvc.matching import Match
from siftsvc.scalespace import Keypoint


def pgm_bytes(width, height, samples, maxval=255):
    return f"P5\n{width} {height}\n{maxval}\n".encode() + bytes(samples)


class TestRasterImage:
    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            RasterImage(width=2, height=2, pixels=np.zeros((3, 2)))

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            RasterImage.from_array(np.array([[0.0, 1.5]]))

    def test_nan_rejected(self):
        with pytest.raises(ValueError):
            RasterImage.from_array(np.array([[0.0, np.nan]]))

    def test_zero_dimension_rejected(self):
        with pytest.raises(ZeroDimensionError):
            RasterImage(width=0, height=1, pixels=np.zeros((1, 0)))


class TestLoadPgm:
    def test_2x2_checker(self):
        img = load_image(pgm_bytes(2, 2, [0, 255, 255, 0]))
        assert (img.width, img.height) == (2, 2)
        assert img.pixels.tolist() == [[0.0, 1.0], [1.0, 0.0]]

    def test_all_128_maps_exactly(self):
        img = load_image(pgm_bytes(3, 2, [128] * 6))
        assert np.all(img.pixels == 128 / 255)

    def test_comments_in_header(self):
        data = b"P5\n# a comment\n2 1\n# another\n255\n" + bytes([10, 20])
        img = load_image(data)
        assert img.pixels.tolist() == [[10 / 255, 20 / 255]]

    def test_truncated_header(self):
        with pytest.raises(MalformedImageError):
            load_image(b"P5\n2 2\n")

    def test_truncated_raster(self):
        with pytest.raises(MalformedImageError):
            load_image(pgm_bytes(4, 4, [0] * 3))

    def test_zero_dimension(self):
        with pytest.raises(ZeroDimensionError):
            load_image(b"P5\n0 4\n255\n")

    def test_16bit_unsupported(self):
        with pytest.raises(UnsupportedFormatError):
            load_image(b"P5\n1 1\n65535\n\x00\x00")

    def test_p6_ppm_unsupported(self):
        with pytest.raises(UnsupportedFormatError):
            load_image(b"P6\n1 1\n255\n\x00\x00\x00")

    def test_garbage_is_malformed(self):
        with pytest.raises(MalformedImageError):
            load_image(b"\x00\x01\x02 definitely not an image")

    def test_scaled_by_maxval(self):
        img = load_image(pgm_bytes(1, 1, [50], maxval=100))
        assert img.pixels[0, 0] == 50 / 100


class TestLoadPillowFormats:
    def encode(self, array_uint8, mode, fmt):
        img = Image.fromarray(array_uint8, mode=mode)
        buf = io.BytesIO()
        img.save(buf, format=fmt)
        return buf.getvalue()

    def test_png_gray(self):
        arr = np.arange(16, dtype=np.uint8).reshape(4, 4) * 16
        img = load_image(self.encode(arr, "L", "PNG"))
        assert np.allclose(img.pixels, arr / 255.0)

    def test_png_rgb_rec601(self):
        rgb = np.zeros((2, 2, 3), dtype=np.uint8)
        rgb[..., 0] = 200  # pure red block
        rgb[0, 0] = (10, 200, 60)
        img = load_image(self.encode(rgb, "RGB", "PNG"))
        expected = (0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]) / 255.0
        assert np.allclose(img.pixels, expected, atol=1e-12)

    def test_gray_conversion_idempotent(self):
        gray = np.linspace(0, 255, 64, dtype=np.uint8).reshape(8, 8)
        rgb = np.repeat(gray[:, :, None], 3, axis=2)
        img = load_image(self.encode(rgb, "RGB", "PNG"))
        assert np.abs(img.pixels - gray / 255.0).max() <= 1 / 255

    def test_jpeg_accepted(self):
        arr = np.full((8, 8), 128, dtype=np.uint8)
        img = load_image(self.encode(arr, "L", "JPEG"))
        assert img.width == 8 and img.height == 8

    def test_corrupt_png_malformed(self):
        good = self.encode(np.zeros((4, 4), dtype=np.uint8), "L", "PNG")
        with pytest.raises(MalformedImageError):
            load_image(good[:20])


class TestSavePgm:
    def test_white_pixel(self):
        data = save_pgm(RasterImage(1, 1, np.array([[1.0]])))
        assert data == b"P5\n1 1\n255\n\xff"

    def test_black_pixel(self):
        data = save_pgm(RasterImage(1, 1, np.array([[0.0]])))
        assert data.endswith(b"\x00")

    def test_roundtrip_all_quantization_levels(self):
        levels = np.arange(256) / 255.0
        img = RasterImage.from_array(levels.reshape(16, 16))
        back = load_image(save_pgm(img))
        assert np.abs(back.pixels - img.pixels).max() <= 1 / 510

    @settings(max_examples=30)
    @given(st.integers(0, 2**32 - 1))
    def test_roundtrip_random_images(self, seed):
        pixels = np.random.default_rng(seed).random((16, 16))
        back = load_image(save_pgm(RasterImage.from_array(pixels)))
        assert np.abs(back.pixels - pixels).max() <= 1 / 510


def kp(x, y, sigma=2.0, orientation=0.0):
    return Keypoint(x=x, y=y, octave=0, level=1, sigma=sigma, orientation=orientation)


def parse_ppm(data):
    magic, dims, maxval, raster = data.split(b"\n", 3)
    assert magic == b"P6" and maxval == b"255"
    w, h = map(int, dims.split())
    return np.frombuffer(raster, dtype=np.uint8).reshape(h, w, 3)


class TestRenderKeypoints:
    def test_empty_list_is_replicated_gray(self, rng):
        img = RasterImage.from_array(rng.random((12, 17)))
        data, skipped = render_keypoints(img, [])
        assert skipped == 0
        rgb = parse_ppm(data)
        expected = np.floor(img.pixels * 255 + 0.5).astype(np.uint8)
        assert np.array_equal(rgb[..., 0], expected)
        assert np.array_equal(rgb[..., 1], expected)
        assert np.array_equal(rgb[..., 2], expected)

    def test_single_center_keypoint_modifies_region(self):
        img = RasterImage.from_array(np.full((21, 21), 0.5))
        data, skipped = render_keypoints(img, [kp(10, 10)])
        assert skipped == 0
        rgb = parse_ppm(data)
        changed = np.nonzero((rgb != 128).any(axis=2))
        assert changed[0].size > 0
        # every modified pixel stays near the keypoint
        assert np.abs(changed[0] - 10).max() <= 5
        assert np.abs(changed[1] - 10).max() <= 5

    def test_out_of_bounds_skipped_and_counted(self):
        img = RasterImage.from_array(np.full((10, 10), 0.5))
        data, skipped = render_keypoints(img, [kp(-3, 5), kp(5, 5), kp(20, 2)])
        assert skipped == 2
        assert parse_ppm(data).shape == (10, 10, 3)

    def test_input_not_mutated(self, rng):
        pixels = rng.random((16, 16))
        img = RasterImage.from_array(pixels.copy())
        render_keypoints(img, [kp(8, 8, sigma=3.0, orientation=1.0)])
        assert np.array_equal(img.pixels, pixels)

    def test_detect_run_keypoints_all_drawable(self):
        from oracles import gaussian_blob
        from siftsvc import detect_and_describe

        img = RasterImage.from_array(gaussian_blob(96, 96, 47.5, 48.5, 4.0))
        result = detect_and_describe(img)
        assert result.keypoints
        for point in result.keypoints:
            assert 0 <= round(point.x) < img.width
            assert 0 <= round(point.y) < img.height
        _, skipped = render_keypoints(img, result.keypoints)
        assert skipped == 0


class TestRenderMatches:
    def test_zero_matches_plain_composite(self, rng):
        a = RasterImage.from_array(rng.random((10, 12)))
        b = RasterImage.from_array(rng.random((14, 9)))
        rgb = parse_ppm(render_matches(a, b, [], [], []))
        assert rgb.shape == (14, 21, 3)
        expected_a = np.floor(a.pixels * 255 + 0.5).astype(np.uint8)
        assert np.array_equal(rgb[:10, :12, 0], expected_a)

    def test_single_origin_match_line(self):
        a = RasterImage.from_array(np.full((6, 8), 0.0))
        b = RasterImage.from_array(np.full((6, 8), 0.0))
        m = Match(index_a=0, index_b=0, distance=0.0, ratio=0.0)
        rgb = parse_ppm(render_matches(a, b, [m], [kp(0, 0)], [kp(0, 0)]))
        ys, xs = np.nonzero(rgb[..., 1] > rgb[..., 0])  # line pixels on black
        # horizontal line from (0,0) to (8,0)
        assert set(ys) == {0}
        assert xs.min() == 0 and xs.max() == 8

    def test_invalid_index_raises(self):
        a = RasterImage.from_array(np.zeros((4, 4)))
        m = Match(index_a=0, index_b=3, distance=0.0, ratio=0.0)
        with pytest.raises(InvalidMatchError):
            render_matches(a, a, [m], [kp(1, 1)], [kp(1, 1)])
