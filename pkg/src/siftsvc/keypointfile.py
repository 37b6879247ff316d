"""Text keypoint file format compatible with the classic SIFT executable.

Layout: a header line ``<count> <descriptor_dim>``, then per keypoint one
line ``y x sigma orientation`` followed by ``descriptor_dim`` integers in
0..255 (byte-quantized descriptor components), wrapped 20 per line.
Note the (y, x) field order, which differs from the JSON schema's (x, y).
"""

from __future__ import annotations

import numpy as np

from .features import quantize_descriptor
from .scalespace import Keypoint

__all__ = ["write_keypoint_file", "read_keypoint_file"]

_VALUES_PER_LINE = 20


def write_keypoint_file(keypoints: list[Keypoint], descriptors: np.ndarray) -> bytes:
    """Serialize keypoints and float descriptors (quantized to bytes)."""
    if len(keypoints) != len(descriptors):
        raise ValueError(
            f"{len(keypoints)} keypoints but {len(descriptors)} descriptors"
        )
    dim = descriptors.shape[1] if len(descriptors) else 128
    lines = [f"{len(keypoints)} {dim}"]
    for kp, desc in zip(keypoints, descriptors):
        lines.append(f"{kp.y:.4f} {kp.x:.4f} {kp.sigma:.4f} {kp.orientation:.4f}")
        quantized = quantize_descriptor(desc)
        for start in range(0, dim, _VALUES_PER_LINE):
            chunk = quantized[start : start + _VALUES_PER_LINE]
            lines.append(" ".join(str(int(v)) for v in chunk))
    return ("\n".join(lines) + "\n").encode("ascii")


def read_keypoint_file(data: bytes) -> tuple[np.ndarray, np.ndarray]:
    """Parse a keypoint file.

    Returns geometry rows (count, 4) float64 ordered (y, x, sigma,
    orientation), and the byte descriptors (count, dim) uint8.
    """
    tokens = data.decode("ascii").split()
    if len(tokens) < 2:
        raise ValueError("keypoint file missing header")
    count, dim = int(tokens[0]), int(tokens[1])
    expected = 2 + count * (4 + dim)
    if len(tokens) != expected:
        raise ValueError(
            f"keypoint file has {len(tokens)} tokens, expected {expected} "
            f"for {count} keypoints of dim {dim}"
        )
    geometry = np.empty((count, 4), dtype=np.float64)
    descriptors = np.empty((count, dim), dtype=np.uint8)
    pos = 2
    for i in range(count):
        geometry[i] = [float(t) for t in tokens[pos : pos + 4]]
        pos += 4
        row = [int(t) for t in tokens[pos : pos + dim]]
        if any(v < 0 or v > 255 for v in row):
            raise ValueError("descriptor component outside 0..255")
        descriptors[i] = row
        pos += dim
    return geometry, descriptors
