"""Export penultimate-layer U-Net activations as BST1 latent-feature files.

Features are written unnormalized; the consumer applies its own L2
normalization so that step lives in exactly one place.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from unet_bridge.bst1 import read_bst1, write_bst1
from unet_bridge.geotiff import read_geotiff
from unet_bridge.unet import load_checkpoint


@dataclass(frozen=True)
class BridgeConfig:
    checkpoint: Path
    inputs: tuple[Path, ...]
    out_dir: Path
    patch_size: int = 256
    device: str = "cpu"

    def __post_init__(self):
        object.__setattr__(self, "checkpoint", Path(self.checkpoint))
        object.__setattr__(self, "inputs", tuple(Path(p) for p in self.inputs))
        object.__setattr__(self, "out_dir", Path(self.out_dir))
        if self.patch_size < 4 or self.patch_size % 4:
            raise ValueError("patch_size must be a positive multiple of 4")


def _load_input(path: Path) -> tuple[np.ndarray, np.ndarray | None]:
    if path.suffix.lower() in (".tif", ".tiff"):
        return read_geotiff(path)
    return read_bst1(path)


def _pad_to_patches(data: np.ndarray, patch: int) -> np.ndarray:
    c, h, w = data.shape
    ph = -(-h // patch) * patch
    pw = -(-w // patch) * patch
    if (ph, pw) == (h, w):
        return data
    padded = np.zeros((c, ph, pw), dtype=data.dtype)
    padded[:, :h, :w] = data
    return padded


def export_features(config: BridgeConfig) -> list[Path]:
    """Run the checkpoint over each input and write one BST1 feature file per input.

    Output files have C = the discovered penultimate-layer width and the
    input's H, W; an input's validity mask is passed through unchanged.
    Inference runs single-threaded in eval mode so repeated exports are
    byte-identical.
    """
    model = load_checkpoint(config.checkpoint, device=config.device)
    torch.set_num_threads(1)
    config.out_dir.mkdir(parents=True, exist_ok=True)

    written: list[Path] = []
    with torch.no_grad():
        for input_path in config.inputs:
            data, mask = _load_input(input_path)
            c, h, w = data.shape
            if c != model.in_channels:
                raise ValueError(
                    f"{input_path}: has {c} bands, checkpoint expects {model.in_channels}"
                )
            padded = _pad_to_patches(data, config.patch_size)
            _, ph, pw = padded.shape
            t = config.patch_size

            feature_planes: np.ndarray | None = None
            for r in range(0, ph, t):
                for col in range(0, pw, t):
                    patch = np.array(padded[:, r : r + t, col : col + t], dtype=np.float32)
                    x = torch.from_numpy(patch[None]).to(config.device)
                    feats = model.features(x)[0].cpu().numpy().astype(np.float32)
                    if feature_planes is None:
                        if feats.shape[0] != model.feature_channels:
                            raise ValueError(
                                f"checkpoint declares {model.feature_channels} feature "
                                f"channels but produces {feats.shape[0]}"
                            )
                        feature_planes = np.zeros((feats.shape[0], ph, pw), dtype=np.float32)
                    feature_planes[:, r : r + t, col : col + t] = feats
            assert feature_planes is not None
            cropped = feature_planes[:, :h, :w]
            if not np.isfinite(cropped).all():
                raise ValueError(f"{input_path}: checkpoint produced non-finite activations")

            out_path = config.out_dir / (input_path.stem + ".bst")
            write_bst1(cropped, out_path, valid_mask=mask)
            written.append(out_path)
    return written
