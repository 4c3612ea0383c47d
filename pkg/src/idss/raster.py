"""Raster data model, BST1 binary interchange, tile/pad/stitch, mask rendering.

BST1 layout: 4-byte magic ``BST1``, three little-endian uint32 (H, W, C),
then H*W*C little-endian float32 values, band-sequential (C planes, each
row-major).  Optional sibling files share the stem: ``.msk`` holds H*W bytes
(nonzero = valid), ``.lbl`` holds H*W class-id bytes.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

MAGIC = b"BST1"
HEADER_SIZE = 16

#: Sentinel-2 band names in storage order (13 bands incl. B8A).
SENTINEL2_BANDS = (
    "B01", "B02", "B03", "B04", "B05", "B06", "B07",
    "B08", "B8A", "B09", "B10", "B11", "B12",
)

CLASS_INVALID = 0
CLASS_LAND = 1
CLASS_WATER = 2
CLASS_CLOUD = 3

CLASS_NAMES = {CLASS_LAND: "Land", CLASS_WATER: "Water", CLASS_CLOUD: "Cloud"}

#: RGB palette for rendered masks.
MASK_PALETTE = {
    CLASS_INVALID: (0, 0, 0),
    CLASS_LAND: (0, 255, 0),
    CLASS_WATER: (0, 0, 255),
    CLASS_CLOUD: (255, 255, 0),
}


class FormatError(ValueError):
    """Raised when a file violates the BST1 (or sibling) layout.

    ``offset`` is the byte position at which the violation was detected.
    """

    def __init__(self, message: str, path: Path | str | None = None, offset: int | None = None):
        detail = message
        if path is not None:
            detail = f"{path}: {detail}"
        if offset is not None:
            detail = f"{detail} (byte offset {offset})"
        super().__init__(detail)
        self.path = None if path is None else Path(path)
        self.offset = offset


def _default_band_names(count: int) -> tuple[str, ...]:
    if count == len(SENTINEL2_BANDS):
        return SENTINEL2_BANDS
    return tuple(f"F{i + 1:02d}" for i in range(count))


@dataclass(frozen=True)
class BandStack:
    """An H x W x C raster held as C float32 planes plus a validity mask."""

    data: np.ndarray  # (C, H, W) float32
    band_names: tuple[str, ...] = ()
    valid_mask: np.ndarray | None = None

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float32)
        if data.ndim != 3:
            raise ValueError(f"band data must be (C, H, W), got shape {data.shape}")
        c, h, w = data.shape
        if c < 1 or h < 1 or w < 1:
            raise ValueError(f"band stack dimensions must be >= 1, got {data.shape}")
        names = tuple(self.band_names) if self.band_names else _default_band_names(c)
        if len(names) != c:
            raise ValueError(f"expected {c} band names, got {len(names)}")
        if self.valid_mask is None:
            mask = np.ones((h, w), dtype=bool)
        else:
            mask = np.asarray(self.valid_mask, dtype=bool)
            if mask.shape != (h, w):
                raise ValueError(f"valid_mask shape {mask.shape} does not match raster ({h}, {w})")
        if not np.isfinite(data[:, mask]).all():
            raise ValueError("non-finite value at a valid pixel")
        data = np.ascontiguousarray(data)
        data.flags.writeable = False
        mask = np.ascontiguousarray(mask)
        mask.flags.writeable = False
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "band_names", names)
        object.__setattr__(self, "valid_mask", mask)

    @property
    def bands(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class LabelMask:
    """Per-pixel class ids: 0=invalid, 1=land, 2=water, 3=cloud."""

    labels: np.ndarray  # (H, W) uint8

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 2 or labels.shape[0] < 1 or labels.shape[1] < 1:
            raise ValueError(f"labels must be a non-empty 2-d array, got shape {labels.shape}")
        if labels.dtype.kind not in "ui":
            raise ValueError(f"labels must be integers, got dtype {labels.dtype}")
        if labels.min() < 0 or labels.max() > CLASS_CLOUD:
            bad = int(labels.min()) if labels.min() < 0 else int(labels.max())
            raise ValueError(f"label id {bad} outside 0..{CLASS_CLOUD}")
        labels = np.ascontiguousarray(labels.astype(np.uint8, copy=True))
        labels.flags.writeable = False
        object.__setattr__(self, "labels", labels)

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]


@dataclass(frozen=True)
class TileGrid:
    """A non-overlapping square tiling of a zero-padded raster."""

    tile_size: int
    original_height: int
    original_width: int
    padded_height: int
    padded_width: int
    tiles: tuple[tuple[int, int], ...] = field(repr=False)

    def __post_init__(self):
        if self.tile_size < 1:
            raise ValueError("tile_size must be >= 1")
        if self.padded_height % self.tile_size or self.padded_width % self.tile_size:
            raise ValueError("padded dimensions must be multiples of tile_size")


def _sibling(path: Path, suffix: str) -> Path:
    return path.with_suffix(suffix)


def write_band_stack(stack: BandStack, path: Path | str) -> None:
    """Write ``stack`` as a BST1 file; the validity mask goes to a sibling ``.msk``.

    The ``.msk`` sibling is only emitted when some pixel is invalid, so an
    all-valid stack round-trips as a single file.
    """
    path = Path(path)
    header = MAGIC + struct.pack("<III", stack.height, stack.width, stack.bands)
    payload = np.ascontiguousarray(stack.data, dtype="<f4").tobytes()
    path.write_bytes(header + payload)
    msk = _sibling(path, ".msk")
    if not stack.valid_mask.all():
        msk.write_bytes(stack.valid_mask.astype(np.uint8).tobytes())
    elif msk.exists():
        msk.unlink()


def read_band_stack(path: Path | str, band_names: tuple[str, ...] | None = None) -> BandStack:
    """Read a BST1 file; a sibling ``.msk``, if present, populates the validity mask."""
    path = Path(path)
    blob = path.read_bytes()
    if blob[:4] != MAGIC:
        raise FormatError(f"bad magic {blob[:4]!r}, expected {MAGIC!r}", path, offset=0)
    if len(blob) < HEADER_SIZE:
        raise FormatError("truncated header", path, offset=len(blob))
    h, w, c = struct.unpack("<III", blob[4:HEADER_SIZE])
    if h < 1 or w < 1 or c < 1:
        raise FormatError(f"degenerate dimensions H={h} W={w} C={c}", path, offset=4)
    expected = HEADER_SIZE + h * w * c * 4
    if len(blob) < expected:
        raise FormatError(f"truncated payload, expected {expected} bytes", path, offset=len(blob))
    if len(blob) > expected:
        raise FormatError("trailing bytes after payload", path, offset=expected)
    data = np.frombuffer(blob, dtype="<f4", offset=HEADER_SIZE).reshape(c, h, w)

    mask = None
    msk_path = _sibling(path, ".msk")
    if msk_path.exists():
        raw = np.frombuffer(msk_path.read_bytes(), dtype=np.uint8)
        if raw.size != h * w:
            raise FormatError(f"mask size {raw.size}, expected {h * w}", msk_path, offset=raw.size)
        mask = (raw != 0).reshape(h, w)

    valid = mask if mask is not None else np.ones((h, w), dtype=bool)
    finite = np.isfinite(data).all(axis=0)
    if not finite[valid].all():
        bad = np.argwhere(valid & ~finite)[0]
        plane = int(np.argmin(np.isfinite(data[:, bad[0], bad[1]])))
        flat = (plane * h + int(bad[0])) * w + int(bad[1])
        raise FormatError("non-finite value at a valid pixel", path, offset=HEADER_SIZE + flat * 4)
    return BandStack(data=data, band_names=band_names or (), valid_mask=valid)


def write_label_mask(mask: LabelMask, path: Path | str) -> None:
    """Write a label mask as bare H*W class-id bytes (the ``.lbl`` layout)."""
    Path(path).write_bytes(mask.labels.tobytes())


def read_label_mask(path: Path | str, shape: tuple[int, int] | None = None) -> LabelMask:
    """Read a ``.lbl`` file.

    The layout carries no dimensions, so ``shape`` must be given when the
    2-d geometry matters (e.g. the sibling stack's H, W); without it the
    labels are returned as a single row, which is sufficient for pixel-wise
    evaluation.
    """
    path = Path(path)
    raw = np.frombuffer(path.read_bytes(), dtype=np.uint8)
    if shape is None:
        shape = (1, raw.size)
    if raw.size != shape[0] * shape[1]:
        raise FormatError(f"label payload of {raw.size} bytes does not match {shape}", path, offset=raw.size)
    return LabelMask(labels=raw.reshape(shape))


def plan_tiles(height: int, width: int, tile_size: int = 256) -> TileGrid:
    """Plan the smallest tile grid covering a ``height`` x ``width`` raster."""
    if height < 1 or width < 1 or tile_size < 1:
        raise ValueError("height, width and tile_size must be >= 1")
    rows = -(-height // tile_size)
    cols = -(-width // tile_size)
    origins = tuple(
        (r * tile_size, c * tile_size) for r in range(rows) for c in range(cols)
    )
    return TileGrid(
        tile_size=tile_size,
        original_height=height,
        original_width=width,
        padded_height=rows * tile_size,
        padded_width=cols * tile_size,
        tiles=origins,
    )


def _check_grid(grid: TileGrid, height: int, width: int) -> None:
    if (grid.original_height, grid.original_width) != (height, width):
        raise ValueError(
            f"grid planned for {grid.original_height}x{grid.original_width}, "
            f"raster is {height}x{width}"
        )


def pad_stack(stack: BandStack, grid: TileGrid) -> BandStack:
    """Zero-pad ``stack`` to the grid's padded size; padded pixels are invalid."""
    _check_grid(grid, stack.height, stack.width)
    if (grid.padded_height, grid.padded_width) == (stack.height, stack.width):
        return stack
    data = np.zeros((stack.bands, grid.padded_height, grid.padded_width), dtype=np.float32)
    data[:, : stack.height, : stack.width] = stack.data
    mask = np.zeros((grid.padded_height, grid.padded_width), dtype=bool)
    mask[: stack.height, : stack.width] = stack.valid_mask
    return BandStack(data=data, band_names=stack.band_names, valid_mask=mask)


def pad_labels(mask: LabelMask, grid: TileGrid) -> LabelMask:
    """Pad a label mask with invalid (0) pixels to the grid's padded size."""
    _check_grid(grid, mask.height, mask.width)
    if (grid.padded_height, grid.padded_width) == (mask.height, mask.width):
        return mask
    labels = np.zeros((grid.padded_height, grid.padded_width), dtype=np.uint8)
    labels[: mask.height, : mask.width] = mask.labels
    return LabelMask(labels=labels)


def split_labels(mask: LabelMask, grid: TileGrid) -> list[tuple[tuple[int, int], LabelMask]]:
    """Cut a padded label mask into ``(origin, tile)`` pairs along the grid."""
    if (mask.height, mask.width) != (grid.padded_height, grid.padded_width):
        raise ValueError(
            f"mask is {mask.height}x{mask.width}, grid expects padded "
            f"{grid.padded_height}x{grid.padded_width}"
        )
    t = grid.tile_size
    return [
        ((r, c), LabelMask(labels=mask.labels[r : r + t, c : c + t]))
        for r, c in grid.tiles
    ]


def stitch_labels(
    tile_masks: list[tuple[tuple[int, int], LabelMask]], grid: TileGrid
) -> LabelMask:
    """Reassemble tile predictions into one mask and cut off the padding.

    Tiles must cover the grid exactly once; the output has the original
    (unpadded) dimensions.
    """
    t = grid.tile_size
    seen: set[tuple[int, int]] = set()
    out = np.zeros((grid.padded_height, grid.padded_width), dtype=np.uint8)
    expected = set(grid.tiles)
    for origin, tile in tile_masks:
        origin = (int(origin[0]), int(origin[1]))
        if origin not in expected:
            raise ValueError(f"unexpected tile origin {origin}")
        if origin in seen:
            raise ValueError(f"duplicate tile origin {origin}")
        if (tile.height, tile.width) != (t, t):
            raise ValueError(f"tile at {origin} is {tile.height}x{tile.width}, expected {t}x{t}")
        seen.add(origin)
        out[origin[0] : origin[0] + t, origin[1] : origin[1] + t] = tile.labels
    missing = expected - seen
    if missing:
        raise ValueError(f"missing tiles at origins {sorted(missing)}")
    return LabelMask(labels=out[: grid.original_height, : grid.original_width])


def write_mask_png(mask: LabelMask, path: Path | str) -> None:
    """Render a label mask as a lossless 8-bit RGB PNG using the fixed palette."""
    lut = np.zeros((256, 3), dtype=np.uint8)
    for class_id, rgb in MASK_PALETTE.items():
        lut[class_id] = rgb
    rgb = lut[mask.labels]
    Image.fromarray(rgb, mode="RGB").save(Path(path), format="PNG")
