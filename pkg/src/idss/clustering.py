"""Dual-space mini-batch K-means.

Assignment decisions happen in latent space only, but every center keeps a
raw-space twin updated with the identical running-mean step, so each center
is simultaneously the mean of its assigned points in both spaces.  With a
per-center step of 1/count the center is the exact sequential mean of the
points routed to it, which is what makes the raw twin meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_CHUNK_ELEMS = 4_000_000  # cap on temporary (points x centers) distance blocks


@dataclass(frozen=True)
class DualPointSet:
    """Index-aligned latent and raw representations of the same pixels."""

    latent: np.ndarray  # (N, n) float64
    raw: np.ndarray  # (N, d) float64

    def __post_init__(self):
        latent = np.ascontiguousarray(np.asarray(self.latent, dtype=np.float64))
        raw = np.ascontiguousarray(np.asarray(self.raw, dtype=np.float64))
        if latent.ndim != 2 or raw.ndim != 2:
            raise ValueError("latent and raw must be (N, dim) arrays")
        if latent.shape[0] != raw.shape[0]:
            raise ValueError(
                f"latent has {latent.shape[0]} points, raw has {raw.shape[0]}"
            )
        if latent.shape[0] < 1:
            raise ValueError("point set is empty")
        if not (np.isfinite(latent).all() and np.isfinite(raw).all()):
            raise ValueError("point set contains non-finite values")
        latent.flags.writeable = False
        raw.flags.writeable = False
        object.__setattr__(self, "latent", latent)
        object.__setattr__(self, "raw", raw)

    @property
    def count(self) -> int:
        return self.latent.shape[0]


@dataclass
class DualCenter:
    """A cluster center held in both spaces with its assignment count."""

    latent_center: np.ndarray  # (n,) float64
    raw_center: np.ndarray  # (d,) float64
    assign_count: int = 0


@dataclass(frozen=True)
class KMeansConfig:
    m: int = 500
    batch_size: int = 1024
    max_iterations: int = 100
    seed: int = 0
    init: str = "kmeans_pp"

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.init not in ("kmeans_pp", "random_points"):
            raise ValueError(f"unknown init {self.init!r}")


def _pairwise_sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances between rows of ``a`` (A, n) and ``b`` (B, n)."""
    aa = np.einsum("ij,ij->i", a, a)
    bb = np.einsum("ij,ij->i", b, b)
    d2 = aa[:, None] + bb[None, :] - 2.0 * (a @ b.T)
    np.maximum(d2, 0.0, out=d2)
    return d2


def _min_sq_dists(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Per-point squared distance to the nearest center, chunked over points."""
    n = points.shape[0]
    chunk = max(1, _CHUNK_ELEMS // max(1, centers.shape[0]))
    out = np.empty(n, dtype=np.float64)
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        out[start:stop] = _pairwise_sq_dists(points[start:stop], centers).min(axis=1)
    return out


def _weighted_seed_indices(
    latent: np.ndarray, m: int, rng: np.random.Generator, uniform: bool
) -> list[int]:
    """Pick up to ``m`` distinct seed points; stops when distinct points run out."""
    n = latent.shape[0]
    chosen = [int(rng.integers(0, n))]
    d2 = _pairwise_sq_dists(latent, latent[chosen[-1:]])[:, 0]
    while len(chosen) < m:
        if uniform:
            eligible = np.flatnonzero(d2 > 0.0)
            if eligible.size == 0:
                break
            nxt = int(rng.choice(eligible))
        else:
            total = d2.sum()
            if total <= 0.0:
                break
            nxt = int(rng.choice(n, p=d2 / total))
        chosen.append(nxt)
        np.minimum(d2, _pairwise_sq_dists(latent, latent[nxt : nxt + 1])[:, 0], out=d2)
    return chosen


def kmeanspp_init(points: DualPointSet, m: int, seed: int) -> list[DualCenter]:
    """Distance-squared-weighted seeding in latent space.

    Each seed copies both representations of its chosen point.  When fewer
    than ``m`` distinct latent points exist, exactly that many seeds are
    returned.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    rng = np.random.default_rng(seed)
    chosen = _weighted_seed_indices(points.latent, m, rng, uniform=False)
    return [
        DualCenter(
            latent_center=points.latent[i].copy(),
            raw_center=points.raw[i].copy(),
            assign_count=0,
        )
        for i in chosen
    ]


def fit(points: DualPointSet, config: KMeansConfig) -> list[DualCenter]:
    """Run mini-batch K-means on the latent stream with dual center updates.

    Per iteration, ``batch_size`` points are sampled with replacement from a
    generator seeded by ``config.seed``; each sampled point is assigned to
    its nearest latent center; the center's count becomes k and both of its
    representations move by 1/k toward the point.  Centers left empty after
    all iterations are re-seeded once, each to a worst-served point (largest
    latent distance to its nearest center).
    """
    rng = np.random.default_rng(config.seed)
    if config.init == "kmeans_pp":
        seeds = kmeanspp_init(points, config.m, config.seed)
    else:
        idx = _weighted_seed_indices(points.latent, config.m, rng, uniform=True)
        seeds = [
            DualCenter(points.latent[i].copy(), points.raw[i].copy(), 0) for i in idx
        ]
    m = len(seeds)
    latent_centers = np.stack([c.latent_center for c in seeds])
    raw_centers = np.stack([c.raw_center for c in seeds])
    counts = np.zeros(m, dtype=np.int64)

    for _ in range(config.max_iterations):
        idx = rng.integers(0, points.count, size=config.batch_size)
        batch_latent = points.latent[idx]
        batch_raw = points.raw[idx]
        assign = _pairwise_sq_dists(batch_latent, latent_centers).argmin(axis=1)
        for j in range(config.batch_size):
            c = assign[j]
            counts[c] += 1
            eta = 1.0 / counts[c]
            latent_centers[c] += eta * (batch_latent[j] - latent_centers[c])
            raw_centers[c] += eta * (batch_raw[j] - raw_centers[c])

    empty = np.flatnonzero(counts == 0)
    if empty.size:
        _repair_empty(points, latent_centers, raw_centers, counts, empty)

    return [
        DualCenter(latent_centers[i].copy(), raw_centers[i].copy(), int(counts[i]))
        for i in range(m)
    ]


def _repair_empty(
    points: DualPointSet,
    latent_centers: np.ndarray,
    raw_centers: np.ndarray,
    counts: np.ndarray,
    empty: np.ndarray,
) -> None:
    """Re-seed empty centers to successive worst-served points.

    Worst-served = largest latent distance to the point's nearest current
    center; each empty center consumes the next point in that order.
    """
    d2 = _min_sq_dists(points.latent, latent_centers)
    order = np.argsort(-d2, kind="stable")
    for cursor, center_idx in enumerate(empty):
        p = order[min(cursor, order.size - 1)]
        latent_centers[center_idx] = points.latent[p]
        raw_centers[center_idx] = points.raw[p]
        counts[center_idx] = 1


def quantization_error(centers: list[DualCenter], points: DualPointSet) -> float:
    """Mean squared latent distance from each point to its nearest center."""
    if not centers:
        raise ValueError("at least one center is required")
    latent_centers = np.stack([c.latent_center for c in centers])
    return float(_min_sq_dists(points.latent, latent_centers).mean())
