"""Per-pixel feature extraction: raw band vectors or file-supplied latent vectors.

Both paths share the same L2 normalization; pixels whose vector cannot be
normalized (zero or non-finite norm) are marked invalid instead of raising,
mirroring how invalid observations are handled everywhere else.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from idss.raster import BandStack, read_band_stack


class DegenerateVectorError(ValueError):
    """A vector with zero or non-finite norm cannot be L2-normalized."""


@dataclass(frozen=True)
class FeatureSpaceDescriptor:
    """Which space pixels are compared in: raw bands or external latent vectors."""

    kind: str = "raw"
    dimension: int = 13
    normalize: bool = True

    def __post_init__(self):
        if self.kind not in ("raw", "latent"):
            raise ValueError(f"unknown feature kind {self.kind!r}")
        if self.dimension < 1:
            raise ValueError("feature dimension must be >= 1")

    @classmethod
    def raw(cls, dimension: int = 13, normalize: bool = True) -> "FeatureSpaceDescriptor":
        return cls(kind="raw", dimension=dimension, normalize=normalize)

    @classmethod
    def latent(cls, dimension: int = 64, normalize: bool = True) -> "FeatureSpaceDescriptor":
        return cls(kind="latent", dimension=dimension, normalize=normalize)


@dataclass(frozen=True)
class FeatureField:
    """Per-pixel feature vectors over an image, with a validity mask."""

    vectors: np.ndarray  # (H, W, n) float32
    valid_mask: np.ndarray  # (H, W) bool

    def __post_init__(self):
        vectors = np.asarray(self.vectors, dtype=np.float32)
        if vectors.ndim != 3:
            raise ValueError(f"vectors must be (H, W, n), got shape {vectors.shape}")
        mask = np.asarray(self.valid_mask, dtype=bool)
        if mask.shape != vectors.shape[:2]:
            raise ValueError(f"valid_mask shape {mask.shape} does not match {vectors.shape[:2]}")
        if not np.isfinite(vectors[mask]).all():
            raise ValueError("non-finite feature vector at a valid pixel")
        vectors = np.ascontiguousarray(vectors)
        vectors.flags.writeable = False
        mask = np.ascontiguousarray(mask)
        mask.flags.writeable = False
        object.__setattr__(self, "vectors", vectors)
        object.__setattr__(self, "valid_mask", mask)

    @property
    def height(self) -> int:
        return self.vectors.shape[0]

    @property
    def width(self) -> int:
        return self.vectors.shape[1]

    @property
    def dimension(self) -> int:
        return self.vectors.shape[2]


def l2_normalize(v: np.ndarray) -> np.ndarray:
    """Return ``v / ||v||``.

    Raises ``DegenerateVectorError`` on zero or non-finite input; callers
    that work per pixel catch it and mark the pixel invalid.
    """
    v = np.asarray(v, dtype=np.float64)
    if not np.isfinite(v).all():
        raise DegenerateVectorError("vector has non-finite components")
    norm = float(np.linalg.norm(v))
    if norm == 0.0 or not np.isfinite(norm):
        raise DegenerateVectorError("vector has zero or non-finite norm")
    return v / norm


def _normalized_field(vectors: np.ndarray, valid: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Normalize per-pixel vectors; degenerate pixels become invalid, zeroed."""
    v64 = vectors.astype(np.float64)
    norms = np.sqrt((v64 * v64).sum(axis=-1))
    good = valid & np.isfinite(norms) & (norms > 0.0)
    out = np.zeros_like(v64)
    np.divide(v64, norms[..., None], out=out, where=good[..., None])
    return out.astype(np.float32), good


def extract_features(
    stack: BandStack,
    desc: FeatureSpaceDescriptor,
    latent_path: Path | str | None = None,
) -> FeatureField:
    """Map a band stack into the feature space described by ``desc``.

    Raw kind reads the band values directly; latent kind loads a BST1 file
    of per-pixel vectors (C = desc.dimension) with matching geometry.  In
    both cases the field's validity is the stack validity AND'ed with
    per-pixel non-degeneracy under normalization.
    """
    if desc.kind == "raw":
        if stack.bands != desc.dimension:
            raise ValueError(
                f"raw feature space expects {desc.dimension} bands, stack has {stack.bands}"
            )
        vectors = np.moveaxis(stack.data, 0, -1)
        valid = stack.valid_mask.copy()
    else:
        if latent_path is None:
            raise ValueError("latent feature space requires a latent feature file")
        latent = read_band_stack(latent_path)
        if latent.bands != desc.dimension:
            raise ValueError(
                f"latent file has {latent.bands} channels, descriptor expects {desc.dimension}"
            )
        if (latent.height, latent.width) != (stack.height, stack.width):
            raise ValueError(
                f"latent geometry {latent.height}x{latent.width} does not match "
                f"stack {stack.height}x{stack.width}"
            )
        vectors = np.moveaxis(latent.data, 0, -1)
        valid = stack.valid_mask & latent.valid_mask

    if desc.normalize:
        vectors, valid = _normalized_field(vectors, valid)
    else:
        vectors = np.where(valid[..., None], vectors, 0.0).astype(np.float32)
    return FeatureField(vectors=vectors, valid_mask=valid)


def field_from_arrays(
    vectors: np.ndarray, valid: np.ndarray, normalize: bool
) -> FeatureField:
    """Build a FeatureField from in-memory per-pixel vectors (prediction path)."""
    vectors = np.asarray(vectors, dtype=np.float32)
    valid = np.asarray(valid, dtype=bool)
    if normalize:
        vectors, valid = _normalized_field(vectors, valid)
    else:
        vectors = np.where(valid[..., None], vectors, 0.0).astype(np.float32)
    return FeatureField(vectors=vectors, valid_mask=valid)
