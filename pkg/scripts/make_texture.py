#!/usr/bin/env python3
"""Regenerate tests/data/texture_256.pgm (deterministic, seed 11).

The test image is a marble-like texture: a sine warp over multi-octave
value noise plus a gentle horizontal phase drift.  It produces ~150
well-spread keypoints whose rotation/scale repeatability comfortably
clears the acceptance targets.
"""

from pathlib import Path

import numpy as np

from siftsvc import RasterImage, save_pgm

SIZE = 256
SEED = 11
SINE_FREQUENCY = 3.0


def marble_texture(size: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    field = np.zeros((size, size))
    for cell, weight in ((4, 0.25), (8, 0.45), (16, 0.7), (32, 1.0), (64, 1.0)):
        n = size // cell + 2
        grid = rng.random((n, n))
        ys = np.linspace(0.0, n - 1.001, size)
        xs = np.linspace(0.0, n - 1.001, size)
        y0 = ys.astype(int)
        x0 = xs.astype(int)
        fy = (ys - y0)[:, None]
        fx = (xs - x0)[None, :]
        field += weight * (
            grid[y0][:, x0] * (1 - fx) * (1 - fy)
            + grid[y0][:, x0 + 1] * fx * (1 - fy)
            + grid[y0 + 1][:, x0] * (1 - fx) * fy
            + grid[y0 + 1][:, x0 + 1] * fx * fy
        )
    out = 0.5 + 0.5 * np.sin(field * SINE_FREQUENCY + np.linspace(0, 12, size)[None, :])
    out -= out.min()
    out /= out.max()
    return 0.05 + 0.9 * out


def main() -> None:
    target = Path(__file__).resolve().parent.parent / "tests" / "data" / "texture_256.pgm"
    target.parent.mkdir(parents=True, exist_ok=True)
    image = RasterImage.from_array(marble_texture(SIZE, SEED))
    target.write_bytes(save_pgm(image))
    print(f"wrote {target}")


if __name__ == "__main__":
    main()
