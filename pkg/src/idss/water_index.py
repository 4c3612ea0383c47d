"""NDWI water-index map and threshold baseline.

NDWI follows the McFeeters green/NIR normalized difference,
(B03 - B08) / (B03 + B08); thresholding labels water where the index is
strictly above the threshold and land otherwise.  Clouds are never
predicted by this two-class baseline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from idss.raster import CLASS_LAND, CLASS_WATER, BandStack, LabelMask

GREEN_BAND = "B03"
NIR_BAND = "B08"


@dataclass(frozen=True)
class IndexMap:
    """Per-pixel index values; pixels without a defined value are invalid."""

    values: np.ndarray  # (H, W) float32
    valid_mask: np.ndarray  # (H, W) bool

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float32)
        mask = np.asarray(self.valid_mask, dtype=bool)
        if values.ndim != 2 or values.shape != mask.shape:
            raise ValueError(f"values {values.shape} and valid_mask {mask.shape} must be equal 2-d shapes")
        if not np.isfinite(values[mask]).all():
            raise ValueError("non-finite index value at a valid pixel")
        values = np.ascontiguousarray(values)
        values.flags.writeable = False
        mask = np.ascontiguousarray(mask)
        mask.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "valid_mask", mask)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


def ndwi(stack: BandStack) -> IndexMap:
    """Compute (green - NIR) / (green + NIR) per valid pixel.

    Pixels where the denominator is zero are undefined and marked invalid.
    """
    try:
        g_idx = stack.band_names.index(GREEN_BAND)
        n_idx = stack.band_names.index(NIR_BAND)
    except ValueError:
        raise ValueError(
            f"stack lacks required bands {GREEN_BAND}/{NIR_BAND}; has {stack.band_names}"
        ) from None
    g = stack.data[g_idx].astype(np.float64)
    n = stack.data[n_idx].astype(np.float64)
    denom = g + n
    defined = stack.valid_mask & (denom != 0.0)
    values = np.zeros_like(denom)
    np.divide(g - n, denom, out=values, where=defined)
    return IndexMap(values=values.astype(np.float32), valid_mask=defined)


def threshold_classify(index: IndexMap, threshold: float) -> LabelMask:
    """Water where the index is strictly above ``threshold``, land otherwise.

    The comparison happens in float64 so the stored 32-bit values and the
    threshold are compared exactly rather than after quantizing the
    threshold to float32.
    """
    water = index.values.astype(np.float64) > float(threshold)
    labels = np.where(water, CLASS_WATER, CLASS_LAND).astype(np.uint8)
    labels[~index.valid_mask] = 0
    return LabelMask(labels=labels)


def index_to_stack(index: IndexMap, band_name: str = "NDWI") -> BandStack:
    """View an index map as a single-band stack (for BST1 export)."""
    return BandStack(
        data=index.values[None, :, :],
        band_names=(band_name,),
        valid_mask=index.valid_mask,
    )
