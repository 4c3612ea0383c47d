"""Convert multiband GeoTIFFs into BST1 stacks with validity masks."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import tifffile

from unet_bridge.bst1 import write_bst1

EXPECTED_BANDS = 13
GDAL_NODATA_TAG = 42113


def read_geotiff(path: Path | str) -> tuple[np.ndarray, np.ndarray | None]:
    """Read a multiband TIFF as (C, H, W) float32 plus an optional validity mask.

    The GDAL nodata tag, when present, marks pixels invalid wherever any
    band carries the nodata value; non-finite samples are treated the same
    way.  Expects exactly 13 bands in either (C, H, W) or (H, W, C) layout.
    """
    path = Path(path)
    with tifffile.TiffFile(path) as tif:
        arr = tif.asarray()
        nodata = None
        tag = tif.pages[0].tags.get(GDAL_NODATA_TAG)
        if tag is not None:
            try:
                nodata = float(str(tag.value).strip())
            except ValueError:
                nodata = None

    if arr.ndim != 3:
        raise ValueError(f"{path}: expected a 3-d multiband raster, got shape {arr.shape}")
    if arr.shape[0] == EXPECTED_BANDS:
        data = arr
    elif arr.shape[-1] == EXPECTED_BANDS:
        data = np.moveaxis(arr, -1, 0)
    else:
        raise ValueError(
            f"{path}: expected {EXPECTED_BANDS} bands, got shape {arr.shape}"
        )
    data = data.astype(np.float32)

    invalid = ~np.isfinite(data).all(axis=0)
    if nodata is not None:
        invalid |= (data == nodata).any(axis=0)
    data = np.where(np.isfinite(data), data, 0.0).astype(np.float32)
    data[:, invalid] = 0.0
    mask = None if not invalid.any() else ~invalid
    return data, mask


def convert_geotiff(path: Path | str, out_path: Path | str) -> None:
    """13-band GeoTIFF -> BST1 stack; nodata pixels go to a sibling ``.msk``."""
    data, mask = read_geotiff(path)
    write_bst1(data, out_path, valid_mask=mask)
