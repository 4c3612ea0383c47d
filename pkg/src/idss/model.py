"""Per-class prototype model: training, similarity scoring, KNN decision, prediction.

A model is a flat pool of prototypes (cluster centers with raw-band twins).
A pixel is labeled by ranking its exponential-kernel similarity to every
prototype of every class, keeping the K best, and voting: the class with the
most of those K neighbors wins.  Vote ties break by larger summed similarity
among the tied classes, then by smaller class id, so decisions are total and
deterministic.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from idss.clustering import DualPointSet, KMeansConfig, fit
from idss.features import FeatureSpaceDescriptor, extract_features, field_from_arrays
from idss.raster import (
    CLASS_NAMES,
    BandStack,
    LabelMask,
    pad_stack,
    plan_tiles,
    read_band_stack,
    stitch_labels,
)

TRAINABLE_CLASSES = (1, 2, 3)

_CHUNK_ELEMS = 4_000_000  # cap on (pixels x prototypes) scoring blocks


class TrainingDataError(ValueError):
    """Training inputs cannot produce a complete model (e.g. a class has no pixels)."""


class ModelFormatError(ValueError):
    """A model file violates the serialization schema or its version."""


@dataclass(frozen=True)
class Prototype:
    """One cluster center: a latent decision vector and its raw-band twin."""

    class_id: int
    latent_center: np.ndarray  # (n,) float64
    raw_center: np.ndarray  # (d,) float64, reflectance units per band
    support_count: int

    def __post_init__(self):
        if self.class_id not in TRAINABLE_CLASSES:
            raise ValueError(f"class_id must be one of {TRAINABLE_CLASSES}, got {self.class_id}")
        if self.support_count < 1:
            raise ValueError("support_count must be >= 1")
        latent = np.ascontiguousarray(np.asarray(self.latent_center, dtype=np.float64))
        raw = np.ascontiguousarray(np.asarray(self.raw_center, dtype=np.float64))
        if latent.ndim != 1 or raw.ndim != 1:
            raise ValueError("prototype centers must be 1-d vectors")
        if not (np.isfinite(latent).all() and np.isfinite(raw).all()):
            raise ValueError("prototype centers must be finite")
        latent.flags.writeable = False
        raw.flags.writeable = False
        object.__setattr__(self, "latent_center", latent)
        object.__setattr__(self, "raw_center", raw)


@dataclass(frozen=True)
class ModelConfig:
    m_per_class: int = 500
    k_neighbors: int = 10
    feature: FeatureSpaceDescriptor = field(default_factory=FeatureSpaceDescriptor)
    kmeans: KMeansConfig = field(default_factory=KMeansConfig)

    def __post_init__(self):
        if self.m_per_class < 1:
            raise ValueError("m_per_class must be >= 1")
        if self.k_neighbors < 1:
            raise ValueError("k_neighbors must be >= 1")


@dataclass(frozen=True)
class IdssModel:
    """Prototype pool plus the configuration needed to reproduce decisions."""

    config: ModelConfig
    prototypes: tuple[Prototype, ...]
    band_names: tuple[str, ...]
    class_names: dict[int, str] = field(default_factory=lambda: dict(CLASS_NAMES))
    format_version: int = 1

    def __post_init__(self):
        n = self.config.feature.dimension
        d = len(self.band_names)
        for i, p in enumerate(self.prototypes):
            if p.latent_center.shape[0] != n:
                raise ValueError(f"prototype {i} latent dimension {p.latent_center.shape[0]} != {n}")
            if p.raw_center.shape[0] != d:
                raise ValueError(f"prototype {i} raw dimension {p.raw_center.shape[0]} != {d}")
        object.__setattr__(self, "prototypes", tuple(self.prototypes))
        object.__setattr__(self, "band_names", tuple(self.band_names))

    @property
    def parameter_count(self) -> int:
        return parameter_count(self)


@dataclass(frozen=True)
class PixelDecision:
    """Outcome of the K-nearest-prototype vote for one pixel."""

    label: int
    neighbor_ids: tuple[int, ...]
    neighbor_similarities: tuple[float, ...]
    votes: dict[int, int]


def parameter_count(model: IdssModel) -> int:
    """Number of prototypes times the decision-space dimension."""
    return len(model.prototypes) * model.config.feature.dimension


def _squared_distances(vectors: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """(V, n) x (P, n) -> (V, P) squared Euclidean distances.

    Accumulated dimension by dimension with purely elementwise operations,
    so a pixel's distances are bit-identical no matter how pixels are
    grouped into tiles or chunks.
    """
    out = np.zeros((vectors.shape[0], centers.shape[0]), dtype=np.float64)
    for dim in range(centers.shape[1]):
        t = vectors[:, dim, None] - centers[None, :, dim]
        out += t * t
    return out


@dataclass(frozen=True)
class _DecisionContext:
    centers: np.ndarray  # (P, n) float64
    class_ids: np.ndarray  # (P,) int64
    k: int


def _context(model: IdssModel) -> _DecisionContext:
    if not model.prototypes:
        raise ValueError("model has no prototypes")
    centers = np.stack([p.latent_center for p in model.prototypes])
    class_ids = np.asarray([p.class_id for p in model.prototypes], dtype=np.int64)
    k = min(model.config.k_neighbors, len(model.prototypes))
    return _DecisionContext(centers=centers, class_ids=class_ids, k=k)


def _decide_chunk(vectors: np.ndarray, ctx: _DecisionContext):
    sims = np.exp(-_squared_distances(vectors, ctx.centers))
    order = np.argsort(-sims, axis=1, kind="stable")[:, : ctx.k]
    topk_sims = np.take_along_axis(sims, order, axis=1)
    topk_classes = ctx.class_ids[order]

    labels = np.zeros(vectors.shape[0], dtype=np.uint8)
    best_votes = np.full(vectors.shape[0], -1, dtype=np.int64)
    best_sum = np.full(vectors.shape[0], -np.inf)
    votes = np.zeros((vectors.shape[0], len(TRAINABLE_CLASSES)), dtype=np.int64)
    for c in TRAINABLE_CLASSES:
        hit = topk_classes == c
        votes_c = hit.sum(axis=1)
        sums_c = np.where(hit, topk_sims, 0.0).sum(axis=1)
        votes[:, c - 1] = votes_c
        # ascending class order with strict comparisons keeps the smaller id on full ties
        better = (votes_c > best_votes) | ((votes_c == best_votes) & (sums_c > best_sum))
        labels[better] = c
        best_votes = np.where(better, votes_c, best_votes)
        best_sum = np.where(better, sums_c, best_sum)
    return labels, order, topk_sims, votes


def _decide_batch(vectors: np.ndarray, ctx: _DecisionContext):
    """Decide labels for (V, n) feature vectors; chunked but grouping-invariant."""
    v = np.ascontiguousarray(vectors, dtype=np.float64)
    n_vec = v.shape[0]
    chunk = max(1, _CHUNK_ELEMS // ctx.centers.shape[0])
    labels = np.empty(n_vec, dtype=np.uint8)
    order = np.empty((n_vec, ctx.k), dtype=np.int64)
    topk = np.empty((n_vec, ctx.k), dtype=np.float64)
    votes = np.empty((n_vec, len(TRAINABLE_CLASSES)), dtype=np.int64)
    for start in range(0, n_vec, chunk):
        stop = min(start + chunk, n_vec)
        labels[start:stop], order[start:stop], topk[start:stop], votes[start:stop] = _decide_chunk(
            v[start:stop], ctx
        )
    return labels, order, topk, votes


def similarity(f: np.ndarray, p: Prototype) -> float:
    """Exponential-kernel similarity exp(-||f - center||^2), in (0, 1].

    ``f`` must live in the model's decision space (the space the prototypes
    were clustered in).
    """
    f = np.asarray(f, dtype=np.float64)
    if f.shape != p.latent_center.shape:
        raise ValueError(f"vector dimension {f.shape} != prototype {p.latent_center.shape}")
    d2 = float(_squared_distances(f[None, :], p.latent_center[None, :])[0, 0])
    return math.exp(-d2)


def decide(f: np.ndarray, model: IdssModel) -> PixelDecision:
    """Label one feature vector by the K-nearest-prototype vote.

    Similarities to the pooled prototypes of all classes are ranked; the
    K = min(k_neighbors, total) best vote for their classes.
    """
    ctx = _context(model)
    f = np.asarray(f, dtype=np.float64)
    if f.ndim != 1 or f.shape[0] != ctx.centers.shape[1]:
        raise ValueError(f"expected a {ctx.centers.shape[1]}-d vector, got shape {f.shape}")
    if not np.isfinite(f).all():
        raise ValueError("feature vector must be finite")
    labels, order, topk, votes = _decide_batch(f[None, :], ctx)
    return PixelDecision(
        label=int(labels[0]),
        neighbor_ids=tuple(int(i) for i in order[0]),
        neighbor_similarities=tuple(float(s) for s in topk[0]),
        votes={c: int(votes[0, c - 1]) for c in TRAINABLE_CLASSES if votes[0, c - 1] > 0},
    )


def train(
    labeled_stacks: list[tuple[BandStack, LabelMask]],
    config: ModelConfig,
    latent_paths: list[Path | str] | None = None,
) -> IdssModel:
    """Fit per-class prototype sets from labeled stacks.

    For each trainable class, every valid pixel carrying that label across
    all stacks contributes a dual point (raw = band vector, latent =
    extracted feature vector); dual K-means with m = m_per_class turns each
    class's points into prototypes.  Invalid-labeled pixels are never used.
    """
    if not labeled_stacks:
        raise TrainingDataError("no training stacks supplied")
    if config.feature.kind == "latent":
        if latent_paths is None or len(latent_paths) != len(labeled_stacks):
            raise ValueError("latent-kind training requires one latent path per stack")
    else:
        latent_paths = [None] * len(labeled_stacks)

    raw_parts: dict[int, list[np.ndarray]] = {c: [] for c in TRAINABLE_CLASSES}
    latent_parts: dict[int, list[np.ndarray]] = {c: [] for c in TRAINABLE_CLASSES}
    band_names: tuple[str, ...] | None = None
    for (stack, mask), latent_path in zip(labeled_stacks, latent_paths):
        if (mask.height, mask.width) != (stack.height, stack.width):
            raise ValueError(
                f"label mask {mask.height}x{mask.width} does not match stack "
                f"{stack.height}x{stack.width}"
            )
        if band_names is None:
            band_names = stack.band_names
        elif stack.bands != len(band_names):
            raise ValueError("training stacks disagree on band count")
        fld = extract_features(stack, config.feature, latent_path)
        raw_pixels = np.moveaxis(stack.data, 0, -1)
        for c in TRAINABLE_CLASSES:
            sel = (mask.labels == c) & fld.valid_mask
            if sel.any():
                raw_parts[c].append(raw_pixels[sel])
                latent_parts[c].append(fld.vectors[sel])

    prototypes: list[Prototype] = []
    kmeans = replace(config.kmeans, m=config.m_per_class)
    for c in TRAINABLE_CLASSES:
        if not raw_parts[c]:
            raise TrainingDataError(f"no valid training pixels for class {CLASS_NAMES[c]!r}")
        points = DualPointSet(
            latent=np.vstack(latent_parts[c]), raw=np.vstack(raw_parts[c])
        )
        for center in fit(points, kmeans):
            prototypes.append(
                Prototype(
                    class_id=c,
                    latent_center=center.latent_center,
                    raw_center=center.raw_center,
                    support_count=center.assign_count,
                )
            )
    return IdssModel(
        config=config,
        prototypes=tuple(prototypes),
        band_names=band_names,
        class_names=dict(CLASS_NAMES),
    )


def predict_mask(
    stack: BandStack,
    model: IdssModel,
    latent_path: Path | str | None = None,
    tile_size: int = 256,
) -> LabelMask:
    """Predict a full-image label mask by tiled K-nearest-prototype decision.

    The stack is padded to the tile grid, features are extracted, every
    valid pixel is decided, invalid pixels get label 0, and tiles are
    stitched back and cropped to the input dimensions.
    """
    desc = model.config.feature
    if stack.bands != len(model.band_names):
        raise ValueError(
            f"stack has {stack.bands} bands, model expects {len(model.band_names)}"
        )
    grid = plan_tiles(stack.height, stack.width, tile_size)
    padded = pad_stack(stack, grid)
    if desc.kind == "latent":
        if latent_path is None:
            raise ValueError("latent-kind model requires a latent feature file")
        latent = read_band_stack(latent_path)
        if latent.bands != desc.dimension:
            raise ValueError(
                f"latent file has {latent.bands} channels, model expects {desc.dimension}"
            )
        if (latent.height, latent.width) != (stack.height, stack.width):
            raise ValueError(
                f"latent geometry {latent.height}x{latent.width} does not match "
                f"stack {stack.height}x{stack.width}"
            )
        padded_latent = pad_stack(latent, grid)
        vectors = np.moveaxis(padded_latent.data, 0, -1)
        valid = padded.valid_mask & padded_latent.valid_mask
    else:
        if stack.bands != desc.dimension:
            raise ValueError(
                f"raw-kind model expects {desc.dimension} bands, stack has {stack.bands}"
            )
        vectors = np.moveaxis(padded.data, 0, -1)
        valid = padded.valid_mask

    fld = field_from_arrays(vectors, valid, desc.normalize)
    ctx = _context(model)
    t = grid.tile_size
    tiles = []
    for r, c in grid.tiles:
        tile_vectors = fld.vectors[r : r + t, c : c + t].reshape(-1, fld.dimension)
        tile_valid = fld.valid_mask[r : r + t, c : c + t].reshape(-1)
        labels = np.zeros(t * t, dtype=np.uint8)
        if tile_valid.any():
            decided, _, _, _ = _decide_batch(tile_vectors[tile_valid], ctx)
            labels[tile_valid] = decided
        tiles.append(((r, c), LabelMask(labels=labels.reshape(t, t))))
    return stitch_labels(tiles, grid)


def save_model(model: IdssModel, path: Path | str) -> None:
    """Serialize a model as human-readable JSON with full-precision reals.

    ``latent_center`` is omitted for prototypes whose latent twin equals the
    raw center bit-for-bit (raw-kind unnormalized models); the loader
    reconstructs it from ``raw_center``.
    """
    desc = model.config.feature
    records = []
    for p in model.prototypes:
        record = {
            "class_id": p.class_id,
            "support_count": p.support_count,
            "raw_center": [float(v) for v in p.raw_center],
        }
        if not np.array_equal(p.latent_center, p.raw_center):
            record["latent_center"] = [float(v) for v in p.latent_center]
        records.append(record)
    doc = {
        "format_version": model.format_version,
        "feature": {"kind": desc.kind, "dimension": desc.dimension, "normalize": desc.normalize},
        "band_names": list(model.band_names),
        "class_names": {str(c): name for c, name in sorted(model.class_names.items())},
        "m_per_class": model.config.m_per_class,
        "k_neighbors": model.config.k_neighbors,
        "prototypes": records,
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def load_model(path: Path | str) -> IdssModel:
    """Load a serialized model; decisions after a round trip are identical."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"{path}: not a model file ({exc})") from exc
    if not isinstance(doc, dict):
        raise ModelFormatError(f"{path}: model file must hold a JSON object")
    version = doc.get("format_version")
    if version != 1:
        raise ModelFormatError(f"{path}: unsupported format_version {version!r}")
    try:
        feat = doc["feature"]
        desc = FeatureSpaceDescriptor(
            kind=feat["kind"], dimension=int(feat["dimension"]), normalize=bool(feat["normalize"])
        )
        band_names = tuple(str(b) for b in doc["band_names"])
        class_names = {int(c): str(name) for c, name in doc["class_names"].items()}
        config = ModelConfig(
            m_per_class=int(doc["m_per_class"]),
            k_neighbors=int(doc["k_neighbors"]),
            feature=desc,
            kmeans=KMeansConfig(),
        )
        prototypes = []
        for i, record in enumerate(doc["prototypes"]):
            raw = np.asarray(record["raw_center"], dtype=np.float64)
            if "latent_center" in record:
                latent = np.asarray(record["latent_center"], dtype=np.float64)
            else:
                if desc.dimension != raw.shape[0]:
                    raise ModelFormatError(
                        f"{path}: prototype {i} omits latent_center but dimensions differ"
                    )
                latent = raw
            prototypes.append(
                Prototype(
                    class_id=int(record["class_id"]),
                    latent_center=latent,
                    raw_center=raw,
                    support_count=int(record["support_count"]),
                )
            )
        return IdssModel(
            config=config,
            prototypes=tuple(prototypes),
            band_names=band_names,
            class_names=class_names,
            format_version=1,
        )
    except ModelFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"{path}: malformed model file ({exc})") from exc
