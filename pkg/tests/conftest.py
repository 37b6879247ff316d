from pathlib import Path

import numpy as np
import pytest

from siftsvc import RasterImage, ScaleSpaceConfig, load_image

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def texture_image() -> RasterImage:
    """The committed 256x256 natural-texture test image."""
    return load_image((DATA_DIR / "texture_256.pgm").read_bytes())


@pytest.fixture(scope="session")
def fast_config() -> ScaleSpaceConfig:
    """Detector config without upsampling, for cheap unit tests."""
    return ScaleSpaceConfig(upsample=False)


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(42)
