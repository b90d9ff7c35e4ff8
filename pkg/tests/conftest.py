import numpy as np
import pytest

from landcover.raster import Raster
from landcover.sampling import Patch, Window


def make_patch(array) -> Patch:
    """Patch from a (h, w) or (h, w, bands) uint8 array."""
    arr = np.asarray(array, dtype=np.uint8)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    return Patch(arr.copy(), Window(0, 0, arr.shape[1], arr.shape[0]))


def make_raster(array) -> Raster:
    arr = np.asarray(array, dtype=np.uint8)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    return Raster(arr.copy())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
