#!/usr/bin/env python3
"""Write a synthetic labeled dataset as BST1 stacks with .lbl siblings.

Example:
    python scripts/make_synthetic_dataset.py --out data/synth --count 8 --seed 20240
"""

import argparse
from pathlib import Path

from idss.raster import write_band_stack, write_label_mask
from idss.synthetic import make_dataset


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--count", type=int, default=8)
    parser.add_argument("--size", type=int, default=256)
    parser.add_argument("--sigma", type=float, default=0.02)
    parser.add_argument("--seed", type=int, default=20240)
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    scenes = make_dataset(args.count, seed=args.seed, size=args.size, sigma=args.sigma)
    for i, (stack, labels) in enumerate(scenes):
        write_band_stack(stack, out / f"scene{i:02d}.bst")
        write_label_mask(labels, out / f"scene{i:02d}.lbl")
        print(f"scene{i:02d}: {stack.height}x{stack.width}x{stack.bands}")
    print(f"wrote {len(scenes)} scenes to {out}")


if __name__ == "__main__":
    main()
