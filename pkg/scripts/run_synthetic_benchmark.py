#!/usr/bin/env python3
"""Desk-scale benchmark: prototype model vs NDWI baselines on synthetic scenes.

Trains on the first 6 of 8 synthetic scenes, evaluates on the last 2, and
prints an IoU/Recall comparison table (total water row) for the prototype
model and two NDWI thresholds.

Example:
    python scripts/run_synthetic_benchmark.py --seed 42
"""

import argparse
import time

import numpy as np

from idss.clustering import KMeansConfig
from idss.features import FeatureSpaceDescriptor
from idss.metrics import confusion, iou, recall
from idss.model import ModelConfig, parameter_count, predict_mask, train
from idss.raster import CLASS_WATER, LabelMask
from idss.synthetic import make_dataset
from idss.water_index import ndwi, threshold_classify


def water_scores(preds, truths):
    counts = confusion(
        LabelMask(np.concatenate(preds, axis=1)),
        LabelMask(np.concatenate(truths, axis=1)),
    )
    return iou(counts, CLASS_WATER), recall(counts, CLASS_WATER)


def pct(value):
    return "n/a" if value is None else f"{100 * value:6.2f}"


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--m", type=int, default=50)
    parser.add_argument("--k", type=int, default=10)
    parser.add_argument("--size", type=int, default=256)
    args = parser.parse_args()

    scenes = make_dataset(8, seed=20240, size=args.size)
    train_set, test_set = scenes[:6], scenes[6:]

    config = ModelConfig(
        m_per_class=args.m,
        k_neighbors=args.k,
        feature=FeatureSpaceDescriptor.raw(13, normalize=False),
        kmeans=KMeansConfig(batch_size=1024, max_iterations=100, seed=args.seed),
    )
    start = time.monotonic()
    model = train(train_set, config)
    train_time = time.monotonic() - start

    truths = [labels.labels for _, labels in test_set]
    start = time.monotonic()
    model_preds = [predict_mask(stack, model).labels for stack, _ in test_set]
    predict_time = time.monotonic() - start

    rows = [("prototype model", *water_scores(model_preds, truths), parameter_count(model))]
    for name, threshold in (("NDWI > -0.22", -0.22), ("NDWI > 0", 0.0)):
        preds = [
            threshold_classify(ndwi(stack), threshold).labels for stack, _ in test_set
        ]
        rows.append((name, *water_scores(preds, truths), None))

    print(f"seed: {args.seed}  (train {train_time:.1f}s, predict {predict_time:.1f}s)")
    print(f"{'model':<18}{'IoU water %':>12}{'Recall water %':>16}{'params':>9}")
    for name, i, r, params in rows:
        print(f"{name:<18}{pct(i):>12}{pct(r):>16}{params if params else '-':>9}")


if __name__ == "__main__":
    main()
