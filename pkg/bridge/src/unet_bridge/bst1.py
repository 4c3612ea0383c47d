"""Minimal BST1 codec, implemented against the documented interchange format.

Layout: magic ``BST1``, three little-endian uint32 (H, W, C), then H*W*C
little-endian float32 values, band-sequential.  A sibling ``.msk`` file
holds H*W bytes (nonzero = valid).  Kept independent of the consumer
package on purpose: the file format is the contract.
"""

from __future__ import annotations

import os
import struct
from pathlib import Path

import numpy as np

MAGIC = b"BST1"
HEADER_SIZE = 16


def read_bst1(path: Path | str) -> tuple[np.ndarray, np.ndarray | None]:
    """Return ``(data, valid_mask)``; data is (C, H, W) float32, mask is (H, W) or None."""
    path = Path(path)
    blob = path.read_bytes()
    if blob[:4] != MAGIC:
        raise ValueError(f"{path}: bad magic {blob[:4]!r}")
    if len(blob) < HEADER_SIZE:
        raise ValueError(f"{path}: truncated header")
    h, w, c = struct.unpack("<III", blob[4:HEADER_SIZE])
    expected = HEADER_SIZE + h * w * c * 4
    if len(blob) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(blob)}")
    data = np.frombuffer(blob, dtype="<f4", offset=HEADER_SIZE).reshape(c, h, w)

    mask = None
    msk_path = path.with_suffix(".msk")
    if msk_path.exists():
        raw = np.frombuffer(msk_path.read_bytes(), dtype=np.uint8)
        if raw.size != h * w:
            raise ValueError(f"{msk_path}: expected {h * w} mask bytes, found {raw.size}")
        mask = (raw != 0).reshape(h, w)
    return data, mask


def write_bst1(data: np.ndarray, path: Path | str, valid_mask: np.ndarray | None = None) -> None:
    """Write a (C, H, W) float32 array atomically (temp file + rename)."""
    data = np.ascontiguousarray(data, dtype="<f4")
    if data.ndim != 3:
        raise ValueError(f"expected (C, H, W) data, got shape {data.shape}")
    c, h, w = data.shape
    path = Path(path)
    blob = MAGIC + struct.pack("<III", h, w, c) + data.tobytes()
    _atomic_write(path, blob)
    if valid_mask is not None:
        mask = np.ascontiguousarray(valid_mask, dtype=bool)
        if mask.shape != (h, w):
            raise ValueError(f"mask shape {mask.shape} does not match raster ({h}, {w})")
        _atomic_write(path.with_suffix(".msk"), mask.astype(np.uint8).tobytes())


def _atomic_write(path: Path, blob: bytes) -> None:
    tmp = path.with_name(f".{path.name}.tmp-{os.getpid()}")
    tmp.write_bytes(blob)
    os.replace(tmp, path)
