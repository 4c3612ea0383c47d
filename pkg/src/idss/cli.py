"""Batch command-line surface: train, predict, evaluate, rules, explain, ndwi.

Every command is deterministic given its flags and seed.  Options may also
come from a JSON config file (``--config``); explicit flags override file
values.  Exit codes: 0 success, 2 usage/config error, 3 data/format error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from idss.clustering import KMeansConfig
from idss.features import FeatureSpaceDescriptor, extract_features
from idss.metrics import render_report_text, report, report_as_dict
from idss.model import (
    ModelConfig,
    ModelFormatError,
    TrainingDataError,
    load_model,
    parameter_count,
    predict_mask,
    save_model,
    train,
)
from idss.raster import (
    CLASS_NAMES,
    FormatError,
    read_band_stack,
    read_label_mask,
    write_band_stack,
    write_label_mask,
    write_mask_png,
)
from idss.rules import (
    explain_pixel,
    export_rules_json,
    export_rules_text,
    generate_rules,
    render_rule_text,
)
from idss.water_index import index_to_stack, ndwi, threshold_classify

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3


class UsageError(Exception):
    """Bad flags or configuration; maps to exit code 2."""


def _load_config(args: argparse.Namespace) -> dict:
    path = getattr(args, "config", None)
    if path is None:
        return {}
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise UsageError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise UsageError(f"config file {path} must hold a JSON object")
    return doc


def _resolve(args, config: dict, key: str, default=None, required: bool = False):
    """Flag value if given, else config file value, else default."""
    value = getattr(args, key, None)
    if value is None:
        value = config.get(key, default)
    if value is None and required:
        raise UsageError(f"missing required option --{key.replace('_', '-')}")
    return value


def _require_file(path: Path | str, role: str) -> Path:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"{role} not found: {path}")
    return path


def cmd_train(args: argparse.Namespace) -> int:
    config = _load_config(args)
    inputs = Path(_resolve(args, config, "inputs", required=True))
    out = Path(_resolve(args, config, "out", required=True))
    m = int(_resolve(args, config, "m", 500))
    k = int(_resolve(args, config, "k", 10))
    feature = str(_resolve(args, config, "feature", "raw"))
    latent_dir = _resolve(args, config, "latent_dir")
    latent_dim = int(_resolve(args, config, "latent_dim", 64))
    batch_size = int(_resolve(args, config, "batch_size", 1024))
    iters = int(_resolve(args, config, "iters", 100))
    seed = int(_resolve(args, config, "seed", 0))
    normalize = _resolve(args, config, "normalize", True)

    if feature not in ("raw", "latent"):
        raise UsageError(f"--feature must be raw or latent, got {feature!r}")
    if feature == "latent" and latent_dir is None:
        raise UsageError("--feature latent requires --latent-dir")
    if not inputs.is_dir():
        raise FileNotFoundError(f"input directory not found: {inputs}")

    stack_paths = sorted(inputs.glob("*.bst"))
    if not stack_paths:
        raise FileNotFoundError(f"no .bst stacks in {inputs}")

    pairs = []
    latent_paths: list[Path] | None = [] if feature == "latent" else None
    for stack_path in stack_paths:
        label_path = _require_file(stack_path.with_suffix(".lbl"), "label file")
        stack = read_band_stack(stack_path)
        labels = read_label_mask(label_path, shape=(stack.height, stack.width))
        pairs.append((stack, labels))
        if latent_paths is not None:
            latent_paths.append(
                _require_file(Path(latent_dir) / stack_path.name, "latent feature file")
            )

    if feature == "raw":
        desc = FeatureSpaceDescriptor.raw(dimension=pairs[0][0].bands, normalize=bool(normalize))
    else:
        desc = FeatureSpaceDescriptor.latent(dimension=latent_dim, normalize=bool(normalize))
    model_config = ModelConfig(
        m_per_class=m,
        k_neighbors=k,
        feature=desc,
        kmeans=KMeansConfig(m=m, batch_size=batch_size, max_iterations=iters, seed=seed),
    )
    model = train(pairs, model_config, latent_paths)
    save_model(model, out)

    print(f"seed: {seed}")
    for c in sorted(CLASS_NAMES):
        count = sum(1 for p in model.prototypes if p.class_id == c)
        print(f"{CLASS_NAMES[c].lower()} prototypes: {count}")
    print(f"parameters: {parameter_count(model)}")
    print(f"model: {out}")
    return EXIT_OK


def cmd_predict(args: argparse.Namespace) -> int:
    config = _load_config(args)
    model_path = _require_file(_resolve(args, config, "model", required=True), "model file")
    stack_path = _require_file(_resolve(args, config, "stack", required=True), "stack file")
    out = Path(_resolve(args, config, "out", required=True))
    latent_features = _resolve(args, config, "latent_features")
    png = _resolve(args, config, "png")
    tile_size = int(_resolve(args, config, "tile_size", 256))

    model = load_model(model_path)
    if model.config.feature.kind == "latent" and latent_features is None:
        raise UsageError("model is latent-kind; --latent-features is required")
    if latent_features is not None:
        latent_features = _require_file(latent_features, "latent feature file")
    stack = read_band_stack(stack_path)
    mask = predict_mask(stack, model, latent_features, tile_size=tile_size)
    write_label_mask(mask, out)
    if png is not None:
        write_mask_png(mask, png)
        print(f"png: {png}")
    print(f"mask: {out}")
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = _load_config(args)
    pred_path = _require_file(_resolve(args, config, "pred", required=True), "prediction mask")
    truth_path = _require_file(_resolve(args, config, "truth", required=True), "reference mask")
    json_out = _resolve(args, config, "json")

    pred = read_label_mask(pred_path)
    truth = read_label_mask(truth_path)
    if pred.width != truth.width:
        raise ValueError(
            f"dimension mismatch: {pred_path} has {pred.width} pixels, "
            f"{truth_path} has {truth.width}"
        )
    rep = report(pred, truth)
    print(render_report_text(rep))
    if json_out is not None:
        Path(json_out).write_text(json.dumps(report_as_dict(rep), indent=1) + "\n")
        print(f"report: {json_out}")
    return EXIT_OK


def cmd_rules(args: argparse.Namespace) -> int:
    config = _load_config(args)
    model_path = _require_file(_resolve(args, config, "model", required=True), "model file")
    out = Path(_resolve(args, config, "out", required=True))
    precision = int(_resolve(args, config, "precision", 4))
    fmt = str(_resolve(args, config, "format", "text"))
    if fmt not in ("text", "json"):
        raise UsageError(f"--format must be text or json, got {fmt!r}")
    if precision < 0:
        raise UsageError("--precision must be >= 0")

    model = load_model(model_path)
    ruleset = generate_rules(model)
    if fmt == "text":
        export_rules_text(ruleset, out, precision)
    else:
        export_rules_json(ruleset, out, precision)
    total = sum(len(r) for r in ruleset.rules_by_class.values())
    print(f"rules: {total} -> {out}")
    return EXIT_OK


def cmd_explain(args: argparse.Namespace) -> int:
    config = _load_config(args)
    model_path = _require_file(_resolve(args, config, "model", required=True), "model file")
    stack_path = _require_file(_resolve(args, config, "stack", required=True), "stack file")
    pixel = _resolve(args, config, "pixel", required=True)
    latent_features = _resolve(args, config, "latent_features")

    model = load_model(model_path)
    if model.config.feature.kind == "latent" and latent_features is None:
        raise UsageError("model is latent-kind; --latent-features is required")
    if latent_features is not None:
        latent_features = _require_file(latent_features, "latent feature file")
    stack = read_band_stack(stack_path)
    row, col = (int(v) for v in pixel)
    if not (0 <= row < stack.height and 0 <= col < stack.width):
        raise UsageError(
            f"pixel ({row}, {col}) outside raster 0..{stack.height - 1} x 0..{stack.width - 1}"
        )
    fld = extract_features(stack, model.config.feature, latent_features)
    if not fld.valid_mask[row, col]:
        raise UsageError(f"pixel ({row}, {col}) is invalid; nothing to explain")

    ruleset = generate_rules(model)
    explanation = explain_pixel(fld.vectors[row, col], model, ruleset)
    label = explanation.label
    print(f"pixel ({row}, {col}) -> {model.class_names.get(label, label)}")
    votes = ", ".join(
        f"{model.class_names.get(c, c)}={n}" for c, n in sorted(explanation.decision.votes.items())
    )
    print(f"votes: {votes}")
    for rank, (rule, sim) in enumerate(explanation.neighbors, start=1):
        name = model.class_names.get(rule.class_id, rule.class_id)
        print(f"{rank:2d}. similarity {sim:.6f}  {name}  {render_rule_text(rule, model.class_names)}")
    return EXIT_OK


def cmd_ndwi(args: argparse.Namespace) -> int:
    config = _load_config(args)
    stack_path = _require_file(_resolve(args, config, "stack", required=True), "stack file")
    threshold = _resolve(args, config, "threshold", required=True)
    out = Path(_resolve(args, config, "out", required=True))
    png = _resolve(args, config, "png")
    index_out = _resolve(args, config, "index_out")

    stack = read_band_stack(stack_path)
    index = ndwi(stack)
    mask = threshold_classify(index, float(threshold))
    write_label_mask(mask, out)
    if index_out is not None:
        write_band_stack(index_to_stack(index), index_out)
        print(f"index: {index_out}")
    if png is not None:
        write_mask_png(mask, png)
        print(f"png: {png}")
    print(f"mask: {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="idss",
        description="Prototype-based interpretable semantic segmentation toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit a prototype model from labeled stacks")
    p.add_argument("--inputs", help="directory of .bst stacks with .lbl siblings")
    p.add_argument("--m", type=int, help="prototypes per class (default 500)")
    p.add_argument("--k", type=int, help="decision neighbors K (default 10)")
    p.add_argument("--feature", choices=["raw", "latent"], help="feature space (default raw)")
    p.add_argument("--latent-dir", dest="latent_dir", help="directory of latent .bst files")
    p.add_argument("--latent-dim", dest="latent_dim", type=int, help="latent dimension (default 64)")
    p.add_argument("--batch-size", dest="batch_size", type=int, help="mini-batch size (default 1024)")
    p.add_argument("--iters", type=int, help="mini-batch iterations (default 100)")
    p.add_argument("--seed", type=int, help="random seed (default 0)")
    p.add_argument("--normalize", dest="normalize", action=argparse.BooleanOptionalAction,
                   default=None, help="L2-normalize feature vectors (default on)")
    p.add_argument("--out", help="output model file")
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict a label mask for one stack")
    p.add_argument("--model", help="model file")
    p.add_argument("--stack", help="input .bst stack")
    p.add_argument("--latent-features", dest="latent_features", help="latent .bst for latent-kind models")
    p.add_argument("--tile-size", dest="tile_size", type=int, help="tile size (default 256)")
    p.add_argument("--out", help="output .lbl mask")
    p.add_argument("--png", help="optional mask rendering")
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="IoU/Recall of a prediction against reference labels")
    p.add_argument("--pred", help="predicted .lbl mask")
    p.add_argument("--truth", help="reference .lbl mask")
    p.add_argument("--json", help="optional JSON report path")
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("rules", help="export the model as IF...THEN rules")
    p.add_argument("--model", help="model file")
    p.add_argument("--out", help="output rules file")
    p.add_argument("--precision", type=int, help="decimal places for band values (default 4)")
    p.add_argument("--format", choices=["text", "json"], help="output format (default text)")
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.set_defaults(func=cmd_rules)

    p = sub.add_parser("explain", help="explain the decision for one pixel")
    p.add_argument("--model", help="model file")
    p.add_argument("--stack", help="input .bst stack")
    p.add_argument("--latent-features", dest="latent_features", help="latent .bst for latent-kind models")
    p.add_argument("--pixel", nargs=2, type=int, metavar=("ROW", "COL"), help="pixel coordinate")
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("ndwi", help="NDWI water-index baseline classification")
    p.add_argument("--stack", help="input .bst stack")
    p.add_argument("--threshold", type=float, help="water threshold (strictly above = water)")
    p.add_argument("--out", help="output .lbl mask")
    p.add_argument("--index-out", dest="index_out", help="optional BST1 export of the index map")
    p.add_argument("--png", help="optional mask rendering")
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.set_defaults(func=cmd_ndwi)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FormatError, ModelFormatError, TrainingDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
