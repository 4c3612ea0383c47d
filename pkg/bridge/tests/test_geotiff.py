import numpy as np
import pytest
import tifffile

from unet_bridge.bst1 import read_bst1
from unet_bridge.geotiff import convert_geotiff


def test_band_major_conversion(tmp_path, rng):
    arr = rng.random((13, 10, 12)).astype(np.float32)
    tifffile.imwrite(tmp_path / "x.tif", arr, photometric="minisblack")
    convert_geotiff(tmp_path / "x.tif", tmp_path / "x.bst")
    data, mask = read_bst1(tmp_path / "x.bst")
    assert data.shape == (13, 10, 12)
    assert np.array_equal(data, arr)
    assert mask is None


def test_pixel_major_layout_accepted(tmp_path, rng):
    arr = rng.random((10, 12, 13)).astype(np.float32)
    tifffile.imwrite(tmp_path / "x.tif", arr, photometric="minisblack")
    convert_geotiff(tmp_path / "x.tif", tmp_path / "x.bst")
    data, _ = read_bst1(tmp_path / "x.bst")
    assert np.array_equal(data, np.moveaxis(arr, -1, 0))


def test_nodata_tag_becomes_mask(tmp_path, rng):
    arr = rng.random((13, 6, 6)).astype(np.float32)
    arr[:, 0, 0] = -9999.0
    arr[3, 2, 4] = -9999.0
    tifffile.imwrite(tmp_path / "x.tif", arr, photometric="minisblack",
                     extratags=[(42113, "s", 0, "-9999", True)])
    convert_geotiff(tmp_path / "x.tif", tmp_path / "x.bst")
    data, mask = read_bst1(tmp_path / "x.bst")
    assert mask is not None
    assert not mask[0, 0]
    assert not mask[2, 4]
    assert mask.sum() == 34
    assert (data[:, ~mask] == 0.0).all()


def test_nonfinite_samples_masked(tmp_path, rng):
    arr = rng.random((13, 4, 4)).astype(np.float32)
    arr[5, 1, 1] = np.nan
    tifffile.imwrite(tmp_path / "x.tif", arr, photometric="minisblack")
    convert_geotiff(tmp_path / "x.tif", tmp_path / "x.bst")
    data, mask = read_bst1(tmp_path / "x.bst")
    assert not mask[1, 1]
    assert np.isfinite(data).all()


def test_rgb_file_rejected(tmp_path, rng):
    arr = (rng.random((8, 8, 3)) * 255).astype(np.uint8)
    tifffile.imwrite(tmp_path / "rgb.tif", arr)
    with pytest.raises(ValueError, match="13 bands"):
        convert_geotiff(tmp_path / "rgb.tif", tmp_path / "x.bst")


def test_band_count_mismatch_rejected(tmp_path, rng):
    arr = rng.random((12, 8, 8)).astype(np.float32)
    tifffile.imwrite(tmp_path / "x.tif", arr, photometric="minisblack")
    with pytest.raises(ValueError, match="13 bands"):
        convert_geotiff(tmp_path / "x.tif", tmp_path / "x.bst")
