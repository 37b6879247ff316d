"""Scale-invariant keypoint detection, description, and matching.

Library layers build bottom-up: raster I/O, Gaussian/DoG scale space,
orientation and descriptor extraction, brute-force ratio-test matching,
and an end-to-end pipeline shared by the CLI and the HTTP service.
"""

__version__ = "0.1.0"

from .features import (
    Descriptor,
    DescriptorConfig,
    GradientField,
    assign_orientations,
    compute_descriptor,
    compute_gradients,
)
from .imageio import (
    ImageDecodeError,
    MalformedImageError,
    RasterImage,
    UnsupportedFormatError,
    ZeroDimensionError,
    load_image,
    render_keypoints,
    render_matches,
    save_pgm,
)
from .matching import Match, distance, match_descriptors
from .pipeline import DetectionResult, detect_and_describe, match_images
from .scalespace import (
    ConfigError,
    DoGPyramid,
    GaussianKernel,
    GaussianPyramid,
    ImageTooSmallError,
    Keypoint,
    Rejection,
    ScaleSpaceConfig,
    build_dog_pyramid,
    build_gaussian_pyramid,
    convolve,
    find_extrema,
    make_kernel,
    refine_extremum,
)

__all__ = [
    "__version__",
    "RasterImage",
    "load_image",
    "save_pgm",
    "render_keypoints",
    "render_matches",
    "ImageDecodeError",
    "MalformedImageError",
    "UnsupportedFormatError",
    "ZeroDimensionError",
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
    "GradientField",
    "Descriptor",
    "DescriptorConfig",
    "compute_gradients",
    "assign_orientations",
    "compute_descriptor",
    "Match",
    "distance",
    "match_descriptors",
    "DetectionResult",
    "detect_and_describe",
    "match_images",
]
