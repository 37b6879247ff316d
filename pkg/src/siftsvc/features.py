"""Gradient fields, principal orientation assignment, and descriptors.

Gradients use raw central differences on a Gaussian pyramid level:
dx = G(x+1, y) - G(x-1, y), dy = G(x, y+1) - G(x, y-1), magnitude
sqrt(dx^2 + dy^2), orientation atan2(dy, dx) mapped into [0, 2*pi).
Descriptors are 4x4 grids of 8-bin orientation histograms built from
16x16 scale-relative samples in the keypoint's rotated frame, Gaussian
weighted, trilinearly interpolated, then normalized / clamped at 0.2 /
renormalized into a unit 128-vector.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .imageio import RasterImage
from .scalespace import Keypoint

__all__ = [
    "GradientField",
    "Descriptor",
    "DescriptorConfig",
    "compute_gradients",
    "orientation_histogram",
    "assign_orientations",
    "raw_descriptor",
    "finalize_descriptor",
    "compute_descriptor",
    "quantize_descriptor",
]

_TWO_PI = 2.0 * math.pi

# Orientation assignment defaults: histogram bins, window/weight factor,
# peak emission fraction, circular smoothing passes.
ORIENTATION_BINS = 36
ORIENTATION_SIGMA_FACTOR = 1.5
ORIENTATION_PEAK_RATIO = 0.8
ORIENTATION_SMOOTH_PASSES = 3


@dataclass(frozen=True)
class GradientField:
    """Per-pixel gradient magnitude and orientation for one pyramid level.

    ``pixel_scale`` converts this level's pixel units to original-image
    pixels (original = local * pixel_scale).
    """

    magnitude: np.ndarray
    orientation: np.ndarray
    octave: int = 0
    level: int = 0
    pixel_scale: float = 1.0


@dataclass(frozen=True)
class DescriptorConfig:
    """Descriptor geometry; the default 4x4x8 yields 128 components."""

    grid_size: int = 4
    orientation_bins: int = 8
    cell_width_factor: float = 3.0
    clamp: float = 0.2

    @property
    def length(self) -> int:
        return self.grid_size * self.grid_size * self.orientation_bins


@dataclass(frozen=True)
class Descriptor:
    """Unit-norm orientation-histogram vector (grid x grid x bins values)."""

    values: np.ndarray
    grid: int = 4
    bins: int = 8


def compute_gradients(
    level: RasterImage | np.ndarray,
    octave: int = 0,
    level_index: int = 0,
    pixel_scale: float = 1.0,
) -> GradientField:
    """Central-difference gradient magnitude/orientation for a level.

    Border pixels use replicated neighbors.  Orientation is the
    quadrant-aware angle of (dx, dy), wrapped into [0, 2*pi).
    """
    pixels = level.pixels if isinstance(level, RasterImage) else np.asarray(level, float)
    h, w = pixels.shape
    if h < 3 or w < 3:
        raise ValueError(f"image too small for gradients: {w}x{h}")
    padded = np.pad(pixels, 1, mode="edge")
    dx = padded[1:-1, 2:] - padded[1:-1, :-2]
    dy = padded[2:, 1:-1] - padded[:-2, 1:-1]
    magnitude = np.hypot(dx, dy)
    orientation = np.mod(np.arctan2(dy, dx), _TWO_PI)
    # mod can round a tiny negative angle up to exactly 2*pi.
    orientation[orientation >= _TWO_PI] = 0.0
    return GradientField(
        magnitude=magnitude,
        orientation=orientation,
        octave=octave,
        level=level_index,
        pixel_scale=pixel_scale,
    )


def _local_frame(kp: Keypoint, gf: GradientField) -> tuple[float, float, float]:
    """Keypoint position and scale in the gradient field's pixel units."""
    return kp.x / gf.pixel_scale, kp.y / gf.pixel_scale, kp.sigma / gf.pixel_scale


def orientation_histogram(
    kp: Keypoint,
    gf: GradientField,
    num_bins: int = ORIENTATION_BINS,
    sigma_factor: float = ORIENTATION_SIGMA_FACTOR,
    smooth_passes: int = ORIENTATION_SMOOTH_PASSES,
) -> np.ndarray:
    """Smoothed gradient-orientation histogram around a keypoint.

    Samples a circular window of radius 3 * sigma_factor * scale, each
    pixel weighted by magnitude times a Gaussian in distance, then applies
    ``smooth_passes`` rounds of circular [1,1,1]/3 averaging.
    """
    x, y, scale = _local_frame(kp, gf)
    win_sigma = sigma_factor * scale
    radius = 3.0 * win_sigma
    h, w = gf.magnitude.shape

    x_lo = max(0, int(math.ceil(x - radius)))
    x_hi = min(w - 1, int(math.floor(x + radius)))
    y_lo = max(0, int(math.ceil(y - radius)))
    y_hi = min(h - 1, int(math.floor(y + radius)))
    if x_lo > x_hi or y_lo > y_hi:
        return np.zeros(num_bins)

    xs = np.arange(x_lo, x_hi + 1, dtype=np.float64)
    ys = np.arange(y_lo, y_hi + 1, dtype=np.float64)
    dist2 = (xs[None, :] - x) ** 2 + (ys[:, None] - y) ** 2
    inside = dist2 <= radius * radius
    if not inside.any():
        return np.zeros(num_bins)

    mag = gf.magnitude[y_lo : y_hi + 1, x_lo : x_hi + 1][inside]
    ang = gf.orientation[y_lo : y_hi + 1, x_lo : x_hi + 1][inside]
    weights = mag * np.exp(-dist2[inside] / (2.0 * win_sigma * win_sigma))
    # bins are centered on multiples of the bin width
    bins = np.rint(ang / _TWO_PI * num_bins).astype(int) % num_bins
    hist = np.bincount(bins, weights=weights, minlength=num_bins)

    third = np.full(3, 1.0 / 3.0)
    for _ in range(smooth_passes):
        hist = np.convolve(np.pad(hist, 1, mode="wrap"), third, mode="valid")
    return hist


def assign_orientations(
    kp: Keypoint,
    gf: GradientField,
    num_bins: int = ORIENTATION_BINS,
    peak_ratio: float = ORIENTATION_PEAK_RATIO,
) -> list[Keypoint]:
    """Emit one keypoint per dominant orientation-histogram peak.

    A bin is a peak if it strictly exceeds both circular neighbors and
    reaches ``peak_ratio`` of the histogram maximum; the orientation is
    refined by fitting a parabola through the peak and its neighbors.
    Returns an empty list when the window holds no usable samples.
    """
    hist = orientation_histogram(kp, gf, num_bins=num_bins)
    peak = hist.max()
    if peak <= 0.0:
        return []

    bin_width = _TWO_PI / num_bins
    out: list[Keypoint] = []
    for i in range(num_bins):
        left = hist[i - 1]
        right = hist[(i + 1) % num_bins]
        center = hist[i]
        if center <= left or center <= right or center < peak_ratio * peak:
            continue
        denom = left - 2.0 * center + right
        delta = 0.0 if denom == 0.0 else 0.5 * (left - right) / denom
        theta = ((i + delta) * bin_width) % _TWO_PI
        if theta >= _TWO_PI:
            theta = 0.0
        out.append(dataclasses.replace(kp, orientation=float(theta)))
    return out


def raw_descriptor(
    kp: Keypoint, gf: GradientField, config: DescriptorConfig = DescriptorConfig()
) -> np.ndarray:
    """Unnormalized descriptor histogram for a keypoint with orientation.

    Takes 4 samples per cell per axis (16x16 for the 4x4 grid) at
    scale-relative positions, rotates them by -orientation into the
    keypoint frame, reads the gradient at the nearest pixel (replicating
    borders), and scatters magnitude * Gaussian(distance; half window)
    trilinearly over (row cell, column cell, orientation bin).
    """
    d = config.grid_size
    nb = config.orientation_bins
    x, y, scale = _local_frame(kp, gf)
    hist_width = config.cell_width_factor * scale
    h, w = gf.magnitude.shape

    # Sample offsets in cell units: 4 per cell, covering [-d/2, d/2].
    n = 4 * d
    coords = (np.arange(n) + 0.5) / 4.0 - d / 2.0
    u, v = np.meshgrid(coords, coords)  # u: columns, v: rows

    cos_t = math.cos(kp.orientation)
    sin_t = math.sin(kp.orientation)
    px = np.rint(x + hist_width * (cos_t * u - sin_t * v)).astype(int)
    py = np.rint(y + hist_width * (sin_t * u + cos_t * v)).astype(int)
    np.clip(px, 0, w - 1, out=px)
    np.clip(py, 0, h - 1, out=py)

    mag = gf.magnitude[py, px]
    rel = np.mod(gf.orientation[py, px] - kp.orientation, _TWO_PI)
    weight = np.exp(-(u**2 + v**2) / (2.0 * (d / 2.0) ** 2))
    contrib = (mag * weight).ravel()

    rbin = (v + d / 2.0 - 0.5).ravel()
    cbin = (u + d / 2.0 - 0.5).ravel()
    obin = (rel / _TWO_PI * nb).ravel()

    r0 = np.floor(rbin).astype(int)
    c0 = np.floor(cbin).astype(int)
    o0 = np.floor(obin).astype(int)
    fr = rbin - r0
    fc = cbin - c0
    fo = obin - o0
    o0 %= nb

    # Accumulate into a (d+2, d+2, nb) buffer so spatial spill off the
    # grid lands in a border that is trimmed afterwards.
    indices = []
    weights = []
    for dr, wr in ((0, 1.0 - fr), (1, fr)):
        for dc, wc in ((0, 1.0 - fc), (1, fc)):
            for do, wo in ((0, 1.0 - fo), (1, fo)):
                indices.append(
                    ((r0 + 1 + dr) * (d + 2) + (c0 + 1 + dc)) * nb + (o0 + do) % nb
                )
                weights.append(contrib * wr * wc * wo)
    hist = np.bincount(
        np.concatenate(indices),
        weights=np.concatenate(weights),
        minlength=(d + 2) * (d + 2) * nb,
    ).reshape(d + 2, d + 2, nb)
    return hist[1 : d + 1, 1 : d + 1, :].ravel()


def finalize_descriptor(raw: np.ndarray, clamp: float = 0.2) -> np.ndarray:
    """Normalize, clamp each component, and renormalize to unit length."""
    norm = np.linalg.norm(raw)
    if norm < 1e-12:
        return np.zeros_like(raw)
    vec = np.minimum(raw / norm, clamp)
    norm = np.linalg.norm(vec)
    if norm < 1e-12:
        return np.zeros_like(vec)
    return vec / norm


def compute_descriptor(
    kp: Keypoint, gf: GradientField, config: DescriptorConfig = DescriptorConfig()
) -> Descriptor:
    """Descriptor for a keypoint whose orientation has been assigned."""
    values = finalize_descriptor(raw_descriptor(kp, gf, config), config.clamp)
    return Descriptor(values=values, grid=config.grid_size, bins=config.orientation_bins)


def quantize_descriptor(values: np.ndarray) -> np.ndarray:
    """Byte quantization round(512 * v) clamped to 255, for file interchange."""
    return np.clip(np.floor(512.0 * np.asarray(values) + 0.5), 0, 255).astype(np.uint8)
