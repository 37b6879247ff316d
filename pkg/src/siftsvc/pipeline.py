"""End-to-end detection and matching drivers shared by the CLI and service."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .features import (
    DescriptorConfig,
    GradientField,
    assign_orientations,
    compute_descriptor,
    compute_gradients,
)
from .imageio import RasterImage
from .matching import Match, match_descriptors
from .scalespace import (
    GaussianPyramid,
    Keypoint,
    Rejection,
    ScaleSpaceConfig,
    build_dog_pyramid,
    build_gaussian_pyramid,
    find_extrema,
    refine_extremum,
)

__all__ = ["DetectionResult", "detect_and_describe", "match_images"]


@dataclass(frozen=True)
class DetectionResult:
    """Keypoints sorted by (octave, level, y, x) with aligned descriptors."""

    keypoints: list[Keypoint]
    descriptors: np.ndarray  # (len(keypoints), 128) float64


class _GradientCache:
    """Lazily computed gradient fields, one per touched pyramid level."""

    def __init__(self, gp: GaussianPyramid):
        self._gp = gp
        self._fields: dict[tuple[int, int], GradientField] = {}

    def get(self, octave: int, level: int) -> GradientField:
        key = (octave, level)
        field = self._fields.get(key)
        if field is None:
            field = compute_gradients(
                self._gp.octaves[octave][level],
                octave=octave,
                level_index=level,
                pixel_scale=self._gp.pixel_scale(octave),
            )
            self._fields[key] = field
        return field


def _dedupe(keypoints: list[Keypoint]) -> list[Keypoint]:
    # Distinct raw extrema can converge onto the same refined point.
    seen = set()
    out = []
    for kp in keypoints:
        key = (kp.octave, kp.level, round(kp.x, 3), round(kp.y, 3), round(kp.sigma, 3))
        if key in seen:
            continue
        seen.add(key)
        out.append(kp)
    return out


def detect_and_describe(
    image: RasterImage,
    config: ScaleSpaceConfig = ScaleSpaceConfig(),
    desc_config: DescriptorConfig = DescriptorConfig(),
) -> DetectionResult:
    """Run the full detect/orient/describe pipeline on one image."""
    gp = build_gaussian_pyramid(image, config)
    dp = build_dog_pyramid(gp)
    gradients = _GradientCache(gp)

    refined: list[Keypoint] = []
    for loc in find_extrema(dp, config):
        kp = refine_extremum(dp, loc, config)
        if isinstance(kp, Rejection):
            continue
        refined.append(kp)

    oriented: list[Keypoint] = []
    for kp in _dedupe(refined):
        field = gradients.get(kp.octave, kp.level)
        oriented.extend(assign_orientations(kp, field))
    oriented.sort(key=lambda k: (k.octave, k.level, k.y, k.x, k.orientation))

    if not oriented:
        return DetectionResult(
            keypoints=[], descriptors=np.empty((0, desc_config.length))
        )
    descriptors = np.stack(
        [
            compute_descriptor(kp, gradients.get(kp.octave, kp.level), desc_config).values
            for kp in oriented
        ]
    )
    return DetectionResult(keypoints=oriented, descriptors=descriptors)


def match_images(
    image_a: RasterImage,
    image_b: RasterImage,
    config: ScaleSpaceConfig = ScaleSpaceConfig(),
    ratio_threshold: float = 0.8,
    desc_config: DescriptorConfig = DescriptorConfig(),
) -> tuple[DetectionResult, DetectionResult, list[Match]]:
    """Detect on both images, then ratio-test match A's descriptors to B's."""
    result_a = detect_and_describe(image_a, config, desc_config)
    result_b = detect_and_describe(image_b, config, desc_config)
    matches = match_descriptors(
        result_a.descriptors, result_b.descriptors, ratio_threshold
    )
    return result_a, result_b, matches
