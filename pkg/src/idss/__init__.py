"""Prototype-based interpretable semantic segmentation for multispectral rasters.

The toolkit labels pixels of multispectral imagery (land / water / cloud) with
a model made of per-class prototypes found by dual-space mini-batch K-means.
Every prototype carries a raw-band twin of its cluster center, so the whole
model can be printed as IF...THEN rules and audited by a human.
"""

from idss.clustering import DualCenter, DualPointSet, KMeansConfig, fit, kmeanspp_init, quantization_error
from idss.features import (
    DegenerateVectorError,
    FeatureField,
    FeatureSpaceDescriptor,
    extract_features,
    l2_normalize,
)
from idss.metrics import ConfusionCounts, MetricsReport, confusion, iou, recall, report
from idss.model import (
    IdssModel,
    ModelConfig,
    ModelFormatError,
    PixelDecision,
    Prototype,
    TrainingDataError,
    decide,
    load_model,
    parameter_count,
    predict_mask,
    save_model,
    similarity,
    train,
)
from idss.raster import (
    CLASS_CLOUD,
    CLASS_INVALID,
    CLASS_LAND,
    CLASS_NAMES,
    CLASS_WATER,
    SENTINEL2_BANDS,
    BandStack,
    FormatError,
    LabelMask,
    TileGrid,
    pad_labels,
    pad_stack,
    plan_tiles,
    read_band_stack,
    read_label_mask,
    split_labels,
    stitch_labels,
    write_band_stack,
    write_label_mask,
    write_mask_png,
)
from idss.rules import Rule, RuleSet, explain_pixel, generate_rules, render_rule_text
from idss.water_index import IndexMap, ndwi, threshold_classify

__version__ = "0.1.0"

__all__ = [
    "BandStack",
    "CLASS_CLOUD",
    "CLASS_INVALID",
    "CLASS_LAND",
    "CLASS_NAMES",
    "CLASS_WATER",
    "ConfusionCounts",
    "DegenerateVectorError",
    "DualCenter",
    "DualPointSet",
    "FeatureField",
    "FeatureSpaceDescriptor",
    "FormatError",
    "IdssModel",
    "IndexMap",
    "KMeansConfig",
    "LabelMask",
    "MetricsReport",
    "ModelConfig",
    "ModelFormatError",
    "PixelDecision",
    "Prototype",
    "Rule",
    "RuleSet",
    "SENTINEL2_BANDS",
    "TileGrid",
    "TrainingDataError",
    "confusion",
    "decide",
    "explain_pixel",
    "extract_features",
    "fit",
    "generate_rules",
    "iou",
    "kmeanspp_init",
    "l2_normalize",
    "load_model",
    "ndwi",
    "pad_labels",
    "pad_stack",
    "parameter_count",
    "plan_tiles",
    "predict_mask",
    "quantization_error",
    "read_band_stack",
    "read_label_mask",
    "recall",
    "render_rule_text",
    "report",
    "save_model",
    "similarity",
    "split_labels",
    "stitch_labels",
    "threshold_classify",
    "train",
    "write_band_stack",
    "write_label_mask",
    "write_mask_png",
]
