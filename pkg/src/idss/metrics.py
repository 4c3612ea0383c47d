"""Confusion counting, IoU and Recall over predictions vs reference labels.

Pixels whose reference label is invalid (0) are excluded entirely; a
prediction of 0 at a labeled pixel counts as a miss (FN) for the reference
class.  Metrics aggregate counts over all evaluated pixels (micro).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from idss.raster import CLASS_NAMES, CLASS_WATER, LabelMask

#: The water row is reported under the heading used for merged flood +
#: permanent water.
WATER_ROW_NAME = "total water"


@dataclass(frozen=True)
class ClassCounts:
    tp: int
    fp: int
    fn: int
    tn: int


@dataclass(frozen=True)
class ConfusionCounts:
    """Per-class TP/FP/FN/TN pixel tallies over jointly evaluated pixels."""

    per_class: dict[int, ClassCounts]
    evaluated_pixels: int


@dataclass(frozen=True)
class MetricsReport:
    iou: dict[int, float | None]
    recall: dict[int, float | None]
    pixel_share: dict[int, float]
    evaluated_pixels: int
    class_names: dict[int, str]


def confusion(pred: LabelMask, truth: LabelMask) -> ConfusionCounts:
    """Count TP/FP/FN/TN per class, excluding pixels with invalid reference."""
    if (pred.height, pred.width) != (truth.height, truth.width):
        raise ValueError(
            f"prediction {pred.height}x{pred.width} does not match "
            f"reference {truth.height}x{truth.width}"
        )
    include = truth.labels != 0
    p = pred.labels[include]
    t = truth.labels[include]
    total = int(include.sum())
    per_class = {}
    for c in CLASS_NAMES:
        tp = int(((p == c) & (t == c)).sum())
        fp = int(((p == c) & (t != c)).sum())
        fn = int(((p != c) & (t == c)).sum())
        per_class[c] = ClassCounts(tp=tp, fp=fp, fn=fn, tn=total - tp - fp - fn)
    return ConfusionCounts(per_class=per_class, evaluated_pixels=total)


def iou(counts: ConfusionCounts, class_id: int) -> float | None:
    """TP / (FP + TP + FN); None when the class is absent from both masks."""
    c = counts.per_class[class_id]
    denom = c.fp + c.tp + c.fn
    if denom == 0:
        return None
    return c.tp / denom


def recall(counts: ConfusionCounts, class_id: int) -> float | None:
    """TP / (TP + FN); None when the class is absent from the reference."""
    c = counts.per_class[class_id]
    denom = c.tp + c.fn
    if denom == 0:
        return None
    return c.tp / denom


def report(
    pred: LabelMask, truth: LabelMask, class_names: dict[int, str] | None = None
) -> MetricsReport:
    """Assemble per-class IoU/Recall and reference pixel shares."""
    counts = confusion(pred, truth)
    names = dict(class_names or CLASS_NAMES)
    names[CLASS_WATER] = WATER_ROW_NAME
    share = {}
    for c in CLASS_NAMES:
        cc = counts.per_class[c]
        truth_pixels = cc.tp + cc.fn
        share[c] = truth_pixels / counts.evaluated_pixels if counts.evaluated_pixels else 0.0
    return MetricsReport(
        iou={c: iou(counts, c) for c in CLASS_NAMES},
        recall={c: recall(counts, c) for c in CLASS_NAMES},
        pixel_share=share,
        evaluated_pixels=counts.evaluated_pixels,
        class_names=names,
    )


def _cell(value: float | None) -> str:
    return "n/a" if value is None else f"{100.0 * value:.2f}"


def render_report_text(rep: MetricsReport) -> str:
    """Aligned-column rendering with percentages at two decimals."""
    rows = [("class", "IoU %", "Recall %", "share %")]
    for c in sorted(rep.iou):
        rows.append(
            (
                rep.class_names.get(c, f"class {c}"),
                _cell(rep.iou[c]),
                _cell(rep.recall[c]),
                f"{100.0 * rep.pixel_share[c]:.2f}",
            )
        )
    widths = [max(len(row[i]) for row in rows) for i in range(4)]
    lines = [
        "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
        for row in rows
    ]
    lines.append(f"evaluated pixels: {rep.evaluated_pixels}")
    return "\n".join(lines)


def report_as_dict(rep: MetricsReport) -> dict:
    """JSON-friendly view of a report (class ids become names)."""
    def tag(c: int) -> str:
        return rep.class_names.get(c, f"class {c}")

    return {
        "evaluated_pixels": rep.evaluated_pixels,
        "iou": {tag(c): rep.iou[c] for c in sorted(rep.iou)},
        "recall": {tag(c): rep.recall[c] for c in sorted(rep.recall)},
        "pixel_share": {tag(c): rep.pixel_share[c] for c in sorted(rep.pixel_share)},
    }
