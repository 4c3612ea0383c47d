"""Synthetic multispectral scenes for desk-scale experiments.

Pixels of each class are drawn from a Gaussian blob in band space around a
fixed per-class spectral profile; the three profiles are separated by well
over 0.3 in Euclidean distance, so a sound classifier should recover the
label map almost perfectly.  Scenes are blocky "field" mosaics with a small
fraction of invalid pixels.
"""

from __future__ import annotations

import numpy as np

from idss.raster import BandStack, LabelMask

#: Plausible reflectance profiles over the 13-band layout.
CLASS_PROFILES = {
    # land: vegetated surface, low visible, strong NIR plateau
    1: np.array(
        [0.05, 0.05, 0.07, 0.06, 0.12, 0.25, 0.30, 0.35, 0.37, 0.20, 0.10, 0.18, 0.12],
        dtype=np.float64,
    ),
    # water: moderate blue/green, absorbing from NIR onward
    2: np.array(
        [0.10, 0.09, 0.08, 0.06, 0.05, 0.04, 0.03, 0.02, 0.02, 0.02, 0.01, 0.01, 0.01],
        dtype=np.float64,
    ),
    # cloud: bright and spectrally flat
    3: np.array(
        [0.55, 0.56, 0.57, 0.58, 0.58, 0.59, 0.60, 0.60, 0.60, 0.55, 0.35, 0.45, 0.40],
        dtype=np.float64,
    ),
}


def profile_separation() -> float:
    """Smallest pairwise Euclidean distance between the class profiles."""
    ids = sorted(CLASS_PROFILES)
    return min(
        float(np.linalg.norm(CLASS_PROFILES[a] - CLASS_PROFILES[b]))
        for i, a in enumerate(ids)
        for b in ids[i + 1 :]
    )


def make_scene(
    rng: np.random.Generator,
    size: int = 256,
    sigma: float = 0.02,
    block: int = 16,
    invalid_fraction: float = 0.02,
) -> tuple[BandStack, LabelMask]:
    """Generate one labeled scene of ``size`` x ``size`` x 13.

    The label map is a mosaic of ``block`` x ``block`` patches with uniform
    random classes; band values are the class profile plus N(0, sigma)
    noise per band; a random ``invalid_fraction`` of pixels is masked out.
    """
    if size % block:
        raise ValueError("size must be a multiple of block")
    cells = size // block
    patch_classes = rng.integers(1, 4, size=(cells, cells))
    underlying = np.repeat(np.repeat(patch_classes, block, axis=0), block, axis=1)

    profiles = np.zeros((4, 13), dtype=np.float64)
    for c, profile in CLASS_PROFILES.items():
        profiles[c] = profile
    bands = profiles[underlying] + rng.normal(0.0, sigma, size=(size, size, 13))

    valid = rng.random((size, size)) >= invalid_fraction
    labels = np.where(valid, underlying, 0).astype(np.uint8)
    stack = BandStack(
        data=np.moveaxis(bands.astype(np.float32), -1, 0), valid_mask=valid
    )
    return stack, LabelMask(labels=labels)


def make_dataset(
    count: int, seed: int, size: int = 256, sigma: float = 0.02
) -> list[tuple[BandStack, LabelMask]]:
    """Generate ``count`` scenes from one seeded generator."""
    rng = np.random.default_rng(seed)
    return [make_scene(rng, size=size, sigma=sigma) for _ in range(count)]
