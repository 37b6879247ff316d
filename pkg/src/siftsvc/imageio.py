"""Raster image decoding, encoding, and diagnostic overlay rendering.

The canonical in-memory form is a grayscale float64 raster with values in
[0, 1].  Binary PGM (P5) is the bit-exact interchange format; PNG and JPEG
are accepted on input and converted to luminance with Rec. 601 weights.
Overlays are written as binary PPM (P6).
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "RasterImage",
    "ImageDecodeError",
    "MalformedImageError",
    "UnsupportedFormatError",
    "ZeroDimensionError",
    "InvalidMatchError",
    "load_image",
    "save_pgm",
    "render_keypoints",
    "render_matches",
]

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"
_JPEG_MAGIC = b"\xff\xd8\xff"

# Rec. 601 luma weights for R, G, B.
_LUMA = np.array([0.299, 0.587, 0.114])

# Overlay palette and geometry.
_KEYPOINT_COLOR = (255, 40, 40)
_MATCH_COLOR = (40, 220, 40)
_RADIUS_PER_SIGMA = 2.0


class ImageDecodeError(ValueError):
    """Input bytes could not be turned into a RasterImage."""


class MalformedImageError(ImageDecodeError):
    """Recognized format but undecodable content."""


class UnsupportedFormatError(ImageDecodeError):
    """Format outside the accepted set (P5 PGM, PNG, JPEG)."""


class ZeroDimensionError(ImageDecodeError):
    """Decoded image has a zero width or height."""


class InvalidMatchError(ValueError):
    """Match refers to a keypoint index outside the given lists."""


@dataclass(frozen=True)
class RasterImage:
    """Grayscale raster: ``pixels`` is a (height, width) float64 array in [0, 1]."""

    width: int
    height: int
    pixels: np.ndarray

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ZeroDimensionError(
                f"image dimensions must be positive, got {self.width}x{self.height}"
            )
        p = self.pixels
        if p.shape != (self.height, self.width):
            raise ValueError(
                f"pixel array shape {p.shape} does not match "
                f"{self.height}x{self.width}"
            )
        if not np.all(np.isfinite(p)):
            raise ValueError("pixel values must be finite")
        if p.min() < 0.0 or p.max() > 1.0:
            raise ValueError("pixel values must lie in [0, 1]")

    @classmethod
    def from_array(cls, pixels: np.ndarray) -> "RasterImage":
        pixels = np.asarray(pixels, dtype=np.float64)
        if pixels.ndim != 2:
            raise ValueError(f"expected a 2-D array, got shape {pixels.shape}")
        h, w = pixels.shape
        return cls(width=w, height=h, pixels=pixels)


def load_image(data: bytes) -> RasterImage:
    """Decode PGM (P5), PNG, or JPEG bytes into a grayscale raster.

    8-bit PGM samples map to value/255 exactly.  Color inputs are reduced to
    luminance with Rec. 601 weights (0.299 R + 0.587 G + 0.114 B).
    """
    if data[:2] == b"P5":
        return _decode_pgm(data)
    if data.startswith(_PNG_MAGIC) or data.startswith(_JPEG_MAGIC):
        return _decode_with_pillow(data)
    if data[:1] == b"P":
        raise UnsupportedFormatError(
            "only binary P5 PGM is accepted among netpbm formats"
        )
    raise MalformedImageError("unrecognized image data")


def _decode_pgm(data: bytes) -> RasterImage:
    pos = 2  # past the P5 magic

    def next_token() -> bytes:
        nonlocal pos
        while pos < len(data):
            c = data[pos : pos + 1]
            if c == b"#":  # comment runs to end of line
                while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                    pos += 1
            elif c.isspace():
                pos += 1
            else:
                break
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise MalformedImageError("truncated PGM header")
        return data[start:pos]

    try:
        width = int(next_token())
        height = int(next_token())
        maxval = int(next_token())
    except ValueError as exc:
        raise MalformedImageError(f"bad PGM header: {exc}") from None
    if width <= 0 or height <= 0:
        raise ZeroDimensionError(f"PGM dimensions {width}x{height}")
    if maxval <= 0:
        raise MalformedImageError(f"PGM maxval {maxval} out of range")
    if maxval > 255:
        raise UnsupportedFormatError("16-bit PGM is not supported")
    pos += 1  # single whitespace byte after maxval
    raster = data[pos : pos + width * height]
    if len(raster) < width * height:
        raise MalformedImageError("PGM raster shorter than width*height")
    samples = np.frombuffer(raster, dtype=np.uint8).astype(np.float64)
    pixels = (samples / maxval).reshape(height, width)
    return RasterImage(width=width, height=height, pixels=pixels)


def _decode_with_pillow(data: bytes) -> RasterImage:
    from PIL import Image, UnidentifiedImageError

    try:
        with Image.open(io.BytesIO(data)) as img:
            img.load()
            mode = img.mode
            if mode in ("I", "I;16", "I;16B", "I;16L", "F"):
                raise UnsupportedFormatError(f"bit depth of mode {mode!r} not supported")
            if mode not in ("1", "L", "LA", "P", "RGB", "RGBA"):
                raise UnsupportedFormatError(f"image mode {mode!r} not supported")
            if mode == "L":
                arr = np.asarray(img, dtype=np.float64)
                pixels = arr / 255.0
            else:
                rgb = np.asarray(img.convert("RGB"), dtype=np.float64)
                pixels = rgb @ _LUMA / 255.0
    except UnidentifiedImageError:
        raise MalformedImageError("undecodable PNG/JPEG data") from None
    except (OSError, SyntaxError) as exc:
        raise MalformedImageError(f"undecodable image: {exc}") from None
    h, w = pixels.shape
    if h == 0 or w == 0:
        raise ZeroDimensionError(f"decoded image is {w}x{h}")
    pixels = np.clip(pixels, 0.0, 1.0)
    return RasterImage(width=w, height=h, pixels=pixels)


def _to_bytes(pixels: np.ndarray) -> np.ndarray:
    return np.floor(pixels * 255.0 + 0.5).astype(np.uint8)


def save_pgm(image: RasterImage) -> bytes:
    """Encode as binary PGM, maxval 255, sample = round(pixel * 255)."""
    header = f"P5\n{image.width} {image.height}\n255\n".encode("ascii")
    return header + _to_bytes(image.pixels).tobytes()


def _save_ppm(rgb: np.ndarray) -> bytes:
    h, w, _ = rgb.shape
    header = f"P6\n{w} {h}\n255\n".encode("ascii")
    return header + rgb.astype(np.uint8).tobytes()


def _gray_to_rgb(image: RasterImage) -> np.ndarray:
    gray = _to_bytes(image.pixels)
    return np.repeat(gray[:, :, None], 3, axis=2)


def _put(rgb: np.ndarray, x: int, y: int, color) -> None:
    if 0 <= x < rgb.shape[1] and 0 <= y < rgb.shape[0]:
        rgb[y, x] = color


def _draw_line(rgb: np.ndarray, x0: int, y0: int, x1: int, y1: int, color) -> None:
    # Bresenham, clipped per pixel.
    dx = abs(x1 - x0)
    dy = -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    while True:
        _put(rgb, x0, y0, color)
        if x0 == x1 and y0 == y1:
            return
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x0 += sx
        if e2 <= dx:
            err += dx
            y0 += sy


def _draw_circle(rgb: np.ndarray, cx: int, cy: int, radius: int, color) -> None:
    # Midpoint circle, clipped per pixel.
    x, y, err = radius, 0, 1 - radius
    while x >= y:
        for px, py in (
            (cx + x, cy + y), (cx - x, cy + y), (cx + x, cy - y), (cx - x, cy - y),
            (cx + y, cy + x), (cx - y, cy + x), (cx + y, cy - x), (cx - y, cy - x),
        ):
            _put(rgb, px, py, color)
        y += 1
        if err < 0:
            err += 2 * y + 1
        else:
            x -= 1
            err += 2 * (y - x) + 1


def render_keypoints(image: RasterImage, keypoints) -> tuple[bytes, int]:
    """Overlay keypoints on the image as circles with orientation ticks.

    Circle radius is proportional to the keypoint sigma.  Keypoints whose
    center falls outside the image are skipped; the count of skipped points
    is returned alongside the encoded PPM.
    """
    rgb = _gray_to_rgb(image)
    skipped = 0
    for kp in keypoints:
        cx = int(round(kp.x))
        cy = int(round(kp.y))
        if not (0 <= cx < image.width and 0 <= cy < image.height):
            skipped += 1
            continue
        radius = max(2, int(round(_RADIUS_PER_SIGMA * kp.sigma)))
        _draw_circle(rgb, cx, cy, radius, _KEYPOINT_COLOR)
        tx = int(round(kp.x + radius * math.cos(kp.orientation)))
        ty = int(round(kp.y + radius * math.sin(kp.orientation)))
        _draw_line(rgb, cx, cy, tx, ty, _KEYPOINT_COLOR)
    return _save_ppm(rgb), skipped


def render_matches(
    a: RasterImage, b: RasterImage, matches, ka, kb
) -> bytes:
    """Render a side-by-side composite with one line segment per match."""
    for m in matches:
        if not (0 <= m.index_a < len(ka)) or not (0 <= m.index_b < len(kb)):
            raise InvalidMatchError(
                f"match ({m.index_a}, {m.index_b}) outside keypoint lists "
                f"of size {len(ka)}, {len(kb)}"
            )
    height = max(a.height, b.height)
    width = a.width + b.width
    rgb = np.zeros((height, width, 3), dtype=np.uint8)
    rgb[: a.height, : a.width] = _gray_to_rgb(a)
    rgb[: b.height, a.width :] = _gray_to_rgb(b)
    for m in matches:
        pa = ka[m.index_a]
        pb = kb[m.index_b]
        _draw_line(
            rgb,
            int(round(pa.x)), int(round(pa.y)),
            a.width + int(round(pb.x)), int(round(pb.y)),
            _MATCH_COLOR,
        )
    return _save_ppm(rgb)
