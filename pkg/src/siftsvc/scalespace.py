"""Gaussian scale-space construction and difference-of-Gaussian extrema.

The pyramid follows the classic parameterization: ``scales_per_octave + 3``
Gaussian levels per octave, absolute blur ``sigma0 * 2**(octave + level/s)``,
2x decimation between octaves, and 26-neighbor extremum detection in the
difference-of-Gaussian stack followed by quadratic subpixel refinement with
contrast and edge-response filtering.

Blur is applied as a separable convolution: a horizontal pass followed by a
vertical pass with the same 1-D kernel, equivalent to convolving with the
outer-product 2-D kernel.  Borders replicate the edge pixel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .imageio import RasterImage

__all__ = [
    "GaussianKernel",
    "ScaleSpaceConfig",
    "GaussianPyramid",
    "DoGPyramid",
    "Keypoint",
    "Rejection",
    "ConfigError",
    "ImageTooSmallError",
    "make_kernel",
    "convolve",
    "build_gaussian_pyramid",
    "build_dog_pyramid",
    "find_extrema",
    "refine_extremum",
]

# Smallest octave dimension the pyramid may reach.
_MIN_OCTAVE_DIM = 8


class ConfigError(ValueError):
    """Scale-space configuration violates an invariant."""


class ImageTooSmallError(ValueError):
    """Image cannot support the requested number of octaves."""


@dataclass(frozen=True)
class GaussianKernel:
    """Normalized 1-D Gaussian taps, truncated at radius ceil(3*sigma)."""

    sigma: float
    radius: int
    taps: np.ndarray


@dataclass(frozen=True)
class ScaleSpaceConfig:
    """Detector parameters.

    ``num_octaves=None`` selects floor(log2(min dimension)) - 2 octaves,
    computed on the pyramid base image (after optional 2x upsampling).
    ``contrast_threshold`` and derived response values live in the [0, 1]
    pixel domain.
    """

    scales_per_octave: int = 3
    sigma0: float = 1.6
    assumed_blur: float = 0.5
    upsample: bool = True
    num_octaves: int | None = None
    contrast_threshold: float = 0.03
    edge_ratio: float = 10.0
    border: int = 5
    max_refine_steps: int = 5

    def validate(self) -> None:
        if self.scales_per_octave < 1:
            raise ConfigError("scales_per_octave must be >= 1")
        if self.assumed_blur < 0:
            raise ConfigError("assumed_blur must be >= 0")
        if self.sigma0 <= self.assumed_blur:
            raise ConfigError("sigma0 must exceed assumed_blur")
        if not (0.0 < self.contrast_threshold <= 1.0):
            raise ConfigError("contrast_threshold must lie in (0, 1]")
        if self.edge_ratio < 1.0:
            raise ConfigError("edge_ratio must be >= 1")
        if self.border < 1:
            raise ConfigError("border must be >= 1")
        if self.max_refine_steps < 1:
            raise ConfigError("max_refine_steps must be >= 1")
        if self.num_octaves is not None and self.num_octaves < 1:
            raise ConfigError("num_octaves must be >= 1 or None for auto")

    def base_blur(self) -> float:
        """Blur already present in the pyramid base image."""
        return self.assumed_blur * (2.0 if self.upsample else 1.0)


@dataclass(frozen=True)
class GaussianPyramid:
    """Octaves of progressively blurred images.

    ``level_sigmas[o][l]`` is the absolute blur of that level measured in
    pixels of the pyramid base image (the 2x-upsampled input when
    ``upsampled`` is true), following sigma0 * 2**(o + l/s).
    """

    octaves: list[list[RasterImage]]
    level_sigmas: list[list[float]]
    scales_per_octave: int
    upsampled: bool
    input_width: int
    input_height: int

    def pixel_scale(self, octave: int) -> float:
        """Original-image pixels per pixel of the given octave."""
        scale = float(2**octave)
        return scale * 0.5 if self.upsampled else scale


@dataclass(frozen=True)
class DoGPyramid:
    """Scale-adjacent differences of the Gaussian pyramid (signed arrays)."""

    octaves: list[list[np.ndarray]]
    scales_per_octave: int
    upsampled: bool
    input_width: int
    input_height: int


@dataclass(frozen=True)
class Keypoint:
    """Accepted scale-space extremum in original-image coordinates.

    ``sigma`` is the absolute scale in original-image pixels; ``response``
    is the interpolated difference-of-Gaussian value at the refined
    extremum.  ``orientation`` is zero until assigned.
    """

    x: float
    y: float
    octave: int
    level: int
    sigma: float
    orientation: float = 0.0
    response: float = 0.0


class Rejection(Enum):
    """Why refinement discarded a raw extremum."""

    LOW_CONTRAST = "low-contrast"
    EDGE = "edge"
    DIVERGED = "diverged"


def make_kernel(sigma: float) -> GaussianKernel:
    """Build a normalized 1-D Gaussian kernel truncated at radius ceil(3*sigma)."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    radius = math.ceil(3.0 * sigma)
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    taps = np.exp(-(offsets**2) / (2.0 * sigma * sigma))
    taps /= taps.sum()
    return GaussianKernel(sigma=sigma, radius=radius, taps=taps)


def _convolve_array(pixels: np.ndarray, kernel: GaussianKernel) -> np.ndarray:
    taps = kernel.taps
    r = kernel.radius
    h, w = pixels.shape
    padded = np.pad(pixels, ((0, 0), (r, r)), mode="edge")
    horiz = sliding_window_view(padded, taps.size, axis=1) @ taps
    padded = np.pad(horiz, ((r, r), (0, 0)), mode="edge")
    out = np.einsum("ijk,k->ij", sliding_window_view(padded, taps.size, axis=0), taps)
    return out


def convolve(image: RasterImage, kernel: GaussianKernel) -> RasterImage:
    """Blur with two 1-D passes; equals direct 2-D convolution with the
    outer-product kernel to within accumulation rounding."""
    out = _convolve_array(image.pixels, kernel)
    # A sum-1 nonnegative kernel preserves [0, 1] up to rounding.
    np.clip(out, 0.0, 1.0, out=out)
    return RasterImage(width=image.width, height=image.height, pixels=out)


def _upsample_axis0(a: np.ndarray) -> np.ndarray:
    # Output sample 2k sits a quarter pixel before input k, 2k+1 a quarter
    # pixel after; edges clamp.
    prev = np.concatenate([a[:1], a[:-1]], axis=0)
    nxt = np.concatenate([a[1:], a[-1:]], axis=0)
    out = np.empty((2 * a.shape[0],) + a.shape[1:], dtype=a.dtype)
    out[0::2] = 0.25 * prev + 0.75 * a
    out[1::2] = 0.75 * a + 0.25 * nxt
    return out


def _upsample2x(pixels: np.ndarray) -> np.ndarray:
    """Bilinear 2x upsampling with half-pixel-center alignment."""
    return _upsample_axis0(_upsample_axis0(pixels.T).T)


def _auto_num_octaves(height: int, width: int) -> int:
    return int(math.floor(math.log2(min(height, width)))) - 2


def build_gaussian_pyramid(image: RasterImage, config: ScaleSpaceConfig) -> GaussianPyramid:
    """Construct the Gaussian pyramid with s+3 levels per octave.

    The first level of octave 0 is reached from the (possibly upsampled)
    input by an incremental blur of sqrt(sigma0^2 - base_blur^2); each
    following level adds the increment that keeps absolute sigmas on the
    sigma0 * 2**(o + l/s) schedule.  The next octave starts from the level
    with twice the octave's base sigma, decimated to every other pixel.
    """
    config.validate()
    s = config.scales_per_octave

    base = _upsample2x(image.pixels) if config.upsample else np.array(image.pixels)
    base_blur = config.base_blur()
    if config.sigma0 <= base_blur:
        raise ConfigError(
            f"sigma0 ({config.sigma0}) must exceed the base image blur "
            f"({base_blur}) implied by assumed_blur and upsampling"
        )

    num_octaves = config.num_octaves
    if num_octaves is None:
        num_octaves = _auto_num_octaves(*base.shape)
    if num_octaves < 1 or min(base.shape) < _MIN_OCTAVE_DIM * 2 ** (num_octaves - 1):
        raise ImageTooSmallError(
            f"base image {base.shape[1]}x{base.shape[0]} cannot support "
            f"{num_octaves} octave(s)"
        )

    # Blur increments between consecutive levels, in octave-local pixels.
    rel_sigmas = [config.sigma0 * 2.0 ** (lvl / s) for lvl in range(s + 3)]
    increments = [
        math.sqrt(rel_sigmas[lvl] ** 2 - rel_sigmas[lvl - 1] ** 2)
        for lvl in range(1, s + 3)
    ]

    octaves: list[list[RasterImage]] = []
    level_sigmas: list[list[float]] = []
    current = _convolve_array(base, make_kernel(math.sqrt(config.sigma0**2 - base_blur**2)))
    np.clip(current, 0.0, 1.0, out=current)
    for octave in range(num_octaves):
        levels = [RasterImage.from_array(current)]
        for inc in increments:
            nxt = _convolve_array(levels[-1].pixels, make_kernel(inc))
            np.clip(nxt, 0.0, 1.0, out=nxt)
            levels.append(RasterImage.from_array(nxt))
        octaves.append(levels)
        level_sigmas.append(
            [config.sigma0 * 2.0 ** (octave + lvl / s) for lvl in range(s + 3)]
        )
        if octave + 1 < num_octaves:
            seed = levels[s].pixels
            h, w = seed.shape
            current = seed[: (h // 2) * 2 : 2, : (w // 2) * 2 : 2].copy()
    return GaussianPyramid(
        octaves=octaves,
        level_sigmas=level_sigmas,
        scales_per_octave=s,
        upsampled=config.upsample,
        input_width=image.width,
        input_height=image.height,
    )


def build_dog_pyramid(gp: GaussianPyramid) -> DoGPyramid:
    """Per octave, the s+2 signed differences of scale-adjacent levels."""
    octaves = []
    for levels in gp.octaves:
        octaves.append(
            [levels[i + 1].pixels - levels[i].pixels for i in range(len(levels) - 1)]
        )
    return DoGPyramid(
        octaves=octaves,
        scales_per_octave=gp.scales_per_octave,
        upsampled=gp.upsampled,
        input_width=gp.input_width,
        input_height=gp.input_height,
    )


def find_extrema(
    dp: DoGPyramid, config: ScaleSpaceConfig
) -> list[tuple[int, int, int, int]]:
    """Scan for strict 26-neighbor extrema in the DoG stack.

    Returns (octave, level, x, y) tuples for samples that are strictly
    greater (or strictly smaller) than all 26 scale-space neighbors, have
    |value| >= 0.5 * contrast_threshold, sit on level 1..s, and lie at
    least ``border`` pixels from every image edge.  Output order is
    (octave, level, y, x) ascending.
    """
    prefilter = 0.5 * config.contrast_threshold
    b = config.border
    found: list[tuple[int, int, int, int]] = []
    for octave, dog in enumerate(dp.octaves):
        h, w = dog[0].shape
        if h <= 2 * b or w <= 2 * b:
            continue
        flats = [lvl.ravel() for lvl in dog]
        for level in range(1, len(dog) - 1):
            region = dog[level][b : h - b, b : w - b]
            ys, xs = np.nonzero(np.abs(region) >= prefilter)
            if ys.size == 0:
                continue
            # Compare candidates against their 26 neighbors by gathering
            # from the flattened levels; much cheaper than full-image scans.
            flat = (ys + b) * w + (xs + b)
            center = region[ys, xs]
            is_max = np.ones(flat.size, dtype=bool)
            is_min = np.ones(flat.size, dtype=bool)
            for dl in (-1, 0, 1):
                lev = flats[level + dl]
                for dy in (-1, 0, 1):
                    for dx in (-1, 0, 1):
                        if dl == 0 and dy == 0 and dx == 0:
                            continue
                        neighbor = lev[flat + (dy * w + dx)]
                        np.logical_and(is_max, center > neighbor, out=is_max)
                        np.logical_and(is_min, center < neighbor, out=is_min)
            keep = is_max | is_min
            found.extend(
                (octave, level, int(x + b), int(y + b))
                for y, x in zip(ys[keep], xs[keep])
            )
    return found


def _grad_and_hessian(dog: list[np.ndarray], level: int, x: int, y: int):
    prev, cur, nxt = dog[level - 1], dog[level], dog[level + 1]
    dx = 0.5 * (cur[y, x + 1] - cur[y, x - 1])
    dy = 0.5 * (cur[y + 1, x] - cur[y - 1, x])
    ds = 0.5 * (nxt[y, x] - prev[y, x])
    v = cur[y, x]
    dxx = cur[y, x + 1] - 2 * v + cur[y, x - 1]
    dyy = cur[y + 1, x] - 2 * v + cur[y - 1, x]
    dss = nxt[y, x] - 2 * v + prev[y, x]
    dxy = 0.25 * (cur[y + 1, x + 1] - cur[y + 1, x - 1] - cur[y - 1, x + 1] + cur[y - 1, x - 1])
    dxs = 0.25 * (nxt[y, x + 1] - nxt[y, x - 1] - prev[y, x + 1] + prev[y, x - 1])
    dys = 0.25 * (nxt[y + 1, x] - nxt[y - 1, x] - prev[y + 1, x] + prev[y - 1, x])
    grad = np.array([dx, dy, ds])
    hess = np.array([[dxx, dxy, dxs], [dxy, dyy, dys], [dxs, dys, dss]])
    return grad, hess


def refine_extremum(
    dp: DoGPyramid, loc: tuple[int, int, int, int], config: ScaleSpaceConfig
) -> Keypoint | Rejection:
    """Subpixel-refine a raw extremum; accept or reject it.

    Fits a 3-D quadratic via central differences, solves for the offset,
    and re-anchors on the neighboring sample while any offset component
    exceeds 0.5 (up to ``max_refine_steps`` attempts).  Accepted points
    must have refined |DoG| >= contrast_threshold and pass the
    trace^2/det < (r+1)^2/r edge test on the 2x2 spatial Hessian.  The
    returned keypoint carries original-image coordinates and scale.
    """
    octave, level, x, y = loc
    dog = dp.octaves[octave]
    s = len(dog) - 2
    h, w = dog[0].shape
    b = max(config.border, 1)

    grad = hess = offset = None
    for _ in range(config.max_refine_steps):
        grad, hess = _grad_and_hessian(dog, level, x, y)
        try:
            offset = -np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            return Rejection.DIVERGED
        if np.all(np.abs(offset) <= 0.5):
            break
        x += int(round(offset[0]))
        y += int(round(offset[1]))
        level += int(round(offset[2]))
        if not (b <= x < w - b and b <= y < h - b and 1 <= level <= s):
            return Rejection.DIVERGED
    else:
        return Rejection.DIVERGED

    value = dog[level][y, x] + 0.5 * float(grad @ offset)
    if abs(value) < config.contrast_threshold:
        return Rejection.LOW_CONTRAST

    dxx, dxy = hess[0, 0], hess[0, 1]
    dyy = hess[1, 1]
    det = dxx * dyy - dxy * dxy
    trace = dxx + dyy
    r = config.edge_ratio
    if det <= 0 or trace * trace / det >= (r + 1.0) ** 2 / r:
        return Rejection.EDGE

    scale = 2.0**octave * (0.5 if dp.upsampled else 1.0)
    x_orig = (x + offset[0]) * scale
    y_orig = (y + offset[1]) * scale
    sigma = (
        config.sigma0
        * 2.0 ** (octave + (level + offset[2]) / s)
        * (0.5 if dp.upsampled else 1.0)
    )
    if not (0 <= x_orig < dp.input_width and 0 <= y_orig < dp.input_height):
        return Rejection.DIVERGED
    return Keypoint(
        x=float(x_orig),
        y=float(y_orig),
        octave=octave,
        level=level,
        sigma=float(sigma),
        orientation=0.0,
        response=float(value),
    )
