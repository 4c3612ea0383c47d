"""Command-line surface: export features, convert GeoTIFFs, init a checkpoint."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from unet_bridge.export import BridgeConfig, export_features
from unet_bridge.geotiff import convert_geotiff
from unet_bridge.unet import init_checkpoint


def cmd_export(args: argparse.Namespace) -> int:
    config = BridgeConfig(
        checkpoint=args.checkpoint,
        inputs=tuple(args.inputs),
        out_dir=args.out_dir,
        patch_size=args.patch_size,
        device=args.device,
    )
    for path in export_features(config):
        print(f"features: {path}")
    return 0


def cmd_convert(args: argparse.Namespace) -> int:
    convert_geotiff(args.input, args.out)
    print(f"stack: {args.out}")
    return 0


def cmd_init(args: argparse.Namespace) -> int:
    model = init_checkpoint(args.out, seed=args.seed)
    print(f"checkpoint: {args.out} ({model.feature_channels} feature channels, untrained)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="unet-bridge",
        description="Export U-Net penultimate-layer features as BST1 files",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("export", help="write one latent-feature file per input")
    p.add_argument("inputs", nargs="+", help="input stacks (.bst or .tif)")
    p.add_argument("--checkpoint", required=True, help="U-Net checkpoint file")
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.add_argument("--patch-size", dest="patch_size", type=int, default=256)
    p.add_argument("--device", default="cpu")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("convert", help="13-band GeoTIFF to BST1 stack")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("init", help="write a randomly initialized checkpoint")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_init)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
