"""Acceptance suite: one test per release criterion, at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one line per
criterion.
"""

import math
import time
from contextlib import contextmanager

import numpy as np

from idss.clustering import DualPointSet, KMeansConfig, fit, quantization_error
from idss.features import FeatureSpaceDescriptor
from idss.metrics import ClassCounts, ConfusionCounts, confusion, iou, recall
from idss.model import (
    IdssModel,
    ModelConfig,
    Prototype,
    decide,
    parameter_count,
    predict_mask,
    similarity,
    train,
)
from idss.raster import BandStack, LabelMask, pad_labels, plan_tiles, split_labels, stitch_labels
from idss.rules import explain_pixel, generate_rules
from idss.synthetic import make_dataset, profile_separation
from idss.water_index import IndexMap, threshold_classify
from oracles import (
    brute_force_confusion,
    brute_force_decide,
    brute_force_threshold,
    build_model,
    lloyd_kmeans,
)


@contextmanager
def criterion(name: str):
    try:
        yield
    except Exception:
        print(f"[ACCEPTANCE] {name}: FAIL")
        raise
    print(f"[ACCEPTANCE] {name}: PASS")


def default_scale_model(seed: int = 0) -> IdssModel:
    """3 classes x 500 prototypes x 64 dimensions, assembled directly."""
    rng = np.random.default_rng(seed)
    prototypes = []
    for c in (1, 2, 3):
        for _ in range(500):
            center = rng.normal(float(c), 0.5, 64)
            prototypes.append(
                Prototype(
                    class_id=c,
                    latent_center=center,
                    raw_center=rng.normal(0.3, 0.1, 13),
                    support_count=int(rng.integers(1, 100)),
                )
            )
    return IdssModel(
        config=ModelConfig(
            m_per_class=500, k_neighbors=10, feature=FeatureSpaceDescriptor.latent(64)
        ),
        prototypes=tuple(prototypes),
        band_names=tuple(f"B{i:02d}" for i in range(1, 14)),
    )


def test_synthetic_end_to_end():
    with criterion("synthetic end-to-end: IoU/Recall >= 0.95 in < 60 s"):
        start = time.monotonic()
        assert profile_separation() >= 0.3
        scenes = make_dataset(8, seed=20240, size=256, sigma=0.02)
        config = ModelConfig(
            m_per_class=50,
            k_neighbors=10,
            feature=FeatureSpaceDescriptor.raw(13, normalize=False),
            kmeans=KMeansConfig(batch_size=1024, max_iterations=100, seed=42),
        )
        model = train(scenes[:6], config)
        preds, truths = [], []
        for stack, labels in scenes[6:]:
            preds.append(predict_mask(stack, model).labels)
            truths.append(labels.labels)
        counts = confusion(
            LabelMask(np.concatenate(preds, axis=1)),
            LabelMask(np.concatenate(truths, axis=1)),
        )
        elapsed = time.monotonic() - start
        for c in (1, 2, 3):
            assert iou(counts, c) >= 0.95, f"class {c} IoU {iou(counts, c)}"
            assert recall(counts, c) >= 0.95, f"class {c} Recall {recall(counts, c)}"
        assert elapsed < 60.0, f"took {elapsed:.1f}s"


def test_clustering_matches_lloyd_oracle():
    with criterion("clustering: quantization error <= 1.10x Lloyd for 5/5 seeds in < 5 s"):
        start = time.monotonic()
        blob_centers = np.array([[0.0, 0.0], [10.0, 0.0], [0.0, 10.0], [10.0, 10.0]])
        for seed in range(5):
            rng = np.random.default_rng(seed)
            points = np.vstack(
                [rng.normal(center, 0.5, (250, 2)) for center in blob_centers]
            )
            dual = DualPointSet(latent=points, raw=points)
            centers = fit(
                dual, KMeansConfig(m=4, batch_size=512, max_iterations=60, seed=seed)
            )
            ours = quantization_error(centers, dual)
            oracle_centers = lloyd_kmeans(points, 4, seed=seed)
            d2 = ((points[:, None, :] - oracle_centers[None, :, :]) ** 2).sum(-1)
            oracle = float(d2.min(axis=1).mean())
            assert ours <= 1.10 * oracle, f"seed {seed}: {ours} vs oracle {oracle}"
        assert time.monotonic() - start < 5.0


def test_dual_consistency_bitwise():
    with criterion("dual consistency: latent stream = raw stream -> bitwise equal centers"):
        for seed, n, dim in ((0, 500, 2), (1, 321, 7), (2, 64, 13)):
            rng = np.random.default_rng(seed)
            points = rng.normal(0, 3, (n, dim))
            dual = DualPointSet(latent=points, raw=points)
            centers = fit(
                dual, KMeansConfig(m=8, batch_size=128, max_iterations=40, seed=seed)
            )
            for c in centers:
                assert c.latent_center.tobytes() == c.raw_center.tobytes()


def test_decision_matches_brute_force_oracle():
    with criterion("decision: matches brute-force scorer on 10,000 random instances"):
        rng = np.random.default_rng(7)
        mismatches = 0
        for _ in range(500):
            model = build_model(
                rng,
                n_prototypes=int(rng.integers(1, 31)),
                dimension=int(rng.integers(1, 7)),
                k_neighbors=int(rng.integers(1, 13)),
            )
            for _ in range(20):
                f = rng.normal(0.0, 1.5, model.config.feature.dimension)
                decision = decide(f, model)
                label, votes = brute_force_decide(f, model)
                if decision.label != label or decision.votes != votes:
                    mismatches += 1
        assert mismatches == 0


def test_similarity_closed_forms():
    with criterion("similarity: exp(-1) within 1e-9, exact 1 at zero distance"):
        p = Prototype(1, np.array([1.0, 0.0, 0.0]), np.array([1.0, 0.0, 0.0]), 1)
        at_unit = similarity(np.zeros(3), p)
        assert abs(at_unit - 0.367879441) <= 1e-9
        at_center = similarity(np.array([1.0, 0.0, 0.0]), p)
        assert at_center == 1.0


def test_metrics_against_oracles():
    with criterion("metrics: confusion oracle, IoU <= Recall, exact quarter"):
        rng = np.random.default_rng(99)
        for _ in range(1000):
            h, w = int(rng.integers(1, 17)), int(rng.integers(1, 17))
            pred = rng.integers(0, 4, (h, w)).astype(np.uint8)
            truth = rng.integers(0, 4, (h, w)).astype(np.uint8)
            counts = confusion(LabelMask(pred), LabelMask(truth))
            want = brute_force_confusion(pred, truth)
            for c in (1, 2, 3):
                cc = counts.per_class[c]
                assert (cc.tp, cc.fp, cc.fn, cc.tn) == want[c]

        for _ in range(10_000):
            tp, fp, fn = (int(v) for v in rng.integers(0, 1000, 3))
            counts = ConfusionCounts(
                per_class={c: ClassCounts(tp, fp, fn, 0) for c in (1, 2, 3)},
                evaluated_pixels=tp + fp + fn,
            )
            i, r = iou(counts, 1), recall(counts, 1)
            if i is not None and r is not None:
                assert i <= r

        quarter = ConfusionCounts(
            per_class={c: ClassCounts(tp=1, fp=1, fn=2, tn=0) for c in (1, 2, 3)},
            evaluated_pixels=4,
        )
        assert iou(quarter, 1) == 0.25


def test_parameter_accounting_default_config():
    with criterion("parameters: 3 classes x 500 prototypes x 64 dims = 96,000"):
        model = default_scale_model()
        assert parameter_count(model) == 96_000


def test_tiling_identity_and_tile_size_independence():
    with criterion("tiling: pad/split/stitch identity x200, predict invariant to tile size"):
        rng = np.random.default_rng(5150)
        for _ in range(200):
            h, w = int(rng.integers(1, 601)), int(rng.integers(1, 601))
            t = int(rng.choice([64, 128, 256]))
            mask = LabelMask(rng.integers(0, 4, (h, w)).astype(np.uint8))
            grid = plan_tiles(h, w, t)
            stitched = stitch_labels(split_labels(pad_labels(mask, grid), grid), grid)
            assert np.array_equal(stitched.labels, mask.labels)

        model = build_model(rng, 12, 13, k_neighbors=5)
        stack = BandStack(data=rng.normal(0.3, 0.2, (13, 300, 200)).astype(np.float32))
        small = predict_mask(stack, model, tile_size=64)
        large = predict_mask(stack, model, tile_size=256)
        assert np.array_equal(small.labels, large.labels)


def test_rules_at_default_scale():
    with criterion("rules: 500 per class, verbatim terms, explain agrees with decide x1000"):
        model = default_scale_model()
        ruleset = generate_rules(model)
        for c in (1, 2, 3):
            assert len(ruleset.rules_by_class[c]) == 500
        for rule in ruleset.all_rules():
            p = model.prototypes[rule.prototype_index]
            assert [v for _, v in rule.terms] == [float(x) for x in p.raw_center]

        rng = np.random.default_rng(31337)
        for _ in range(1000):
            f = rng.normal(2.0, 1.0, 64)
            assert explain_pixel(f, model, ruleset).label == decide(f, model).label


def test_ndwi_thresholding():
    with criterion("NDWI: monotone thresholds x100, strict-> semantics vs oracle"):
        rng = np.random.default_rng(4242)
        for _ in range(100):
            values = (rng.random((12, 12)) * 2 - 1).astype(np.float32)
            valid = rng.random((12, 12)) > 0.1
            index = IndexMap(values=values, valid_mask=valid)
            lo, hi = sorted(rng.uniform(-1, 1, 2))
            water_lo = int((threshold_classify(index, lo).labels == 2).sum())
            water_hi = int((threshold_classify(index, hi).labels == 2).sum())
            assert water_hi <= water_lo

        for threshold in (-0.22, 0.0):
            for _ in range(50):
                values = (rng.random((9, 9)) * 2 - 1).astype(np.float32)
                # plant exact-threshold pixels to pin the strict-> rule
                values[0, 0] = threshold
                valid = rng.random((9, 9)) > 0.15
                index = IndexMap(values=values, valid_mask=valid)
                got = threshold_classify(index, threshold)
                want = brute_force_threshold(values, valid, threshold)
                assert np.array_equal(got.labels, want)
