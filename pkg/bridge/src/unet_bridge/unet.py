"""U-Net with an inspectable penultimate feature map, plus checkpoint I/O.

The checkpoint file stores the architecture hyperparameters next to the
weights so a saved network can be rebuilt without out-of-band knowledge.
"""

from __future__ import annotations

from pathlib import Path

import torch
from torch import nn


class ConvBlock(nn.Module):
    def __init__(self, in_channels: int, out_channels: int):
        super().__init__()
        self.block = nn.Sequential(
            nn.Conv2d(in_channels, out_channels, kernel_size=3, padding=1),
            nn.ReLU(inplace=True),
            nn.Conv2d(out_channels, out_channels, kernel_size=3, padding=1),
            nn.ReLU(inplace=True),
        )

    def forward(self, x):
        return self.block(x)


class UNet(nn.Module):
    """Two-level encoder/decoder; ``features`` is the map before the classifier."""

    def __init__(
        self,
        in_channels: int = 13,
        num_classes: int = 3,
        base_channels: int = 32,
        feature_channels: int = 64,
    ):
        super().__init__()
        self.in_channels = in_channels
        self.num_classes = num_classes
        self.base_channels = base_channels
        self.feature_channels = feature_channels

        self.enc1 = ConvBlock(in_channels, base_channels)
        self.enc2 = ConvBlock(base_channels, base_channels * 2)
        self.pool = nn.MaxPool2d(2)
        self.bottleneck = ConvBlock(base_channels * 2, base_channels * 4)
        self.up2 = nn.ConvTranspose2d(base_channels * 4, base_channels * 2, 2, stride=2)
        self.dec2 = ConvBlock(base_channels * 4, base_channels * 2)
        self.up1 = nn.ConvTranspose2d(base_channels * 2, base_channels, 2, stride=2)
        self.dec1 = ConvBlock(base_channels * 2, feature_channels)
        self.classifier = nn.Conv2d(feature_channels, num_classes, kernel_size=1)

    def features(self, x: torch.Tensor) -> torch.Tensor:
        """Penultimate feature map with the input's spatial dimensions.

        Input H and W must be multiples of 4 (two pooling levels).
        """
        if x.shape[-1] % 4 or x.shape[-2] % 4:
            raise ValueError(f"spatial dims must be multiples of 4, got {tuple(x.shape[-2:])}")
        e1 = self.enc1(x)
        e2 = self.enc2(self.pool(e1))
        b = self.bottleneck(self.pool(e2))
        d2 = self.dec2(torch.cat([self.up2(b), e2], dim=1))
        d1 = self.dec1(torch.cat([self.up1(d2), e1], dim=1))
        return d1

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.classifier(self.features(x))

    def hyperparameters(self) -> dict:
        return {
            "in_channels": self.in_channels,
            "num_classes": self.num_classes,
            "base_channels": self.base_channels,
            "feature_channels": self.feature_channels,
        }


def save_checkpoint(model: UNet, path: Path | str) -> None:
    torch.save({"config": model.hyperparameters(), "state_dict": model.state_dict()}, path)


def load_checkpoint(path: Path | str, device: str = "cpu") -> UNet:
    """Rebuild the network stored at ``path`` and load its weights strictly."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    try:
        payload = torch.load(path, map_location=device, weights_only=True)
    except Exception as exc:
        raise ValueError(f"{path}: cannot load checkpoint ({exc})") from exc
    if not isinstance(payload, dict) or "config" not in payload or "state_dict" not in payload:
        raise ValueError(f"{path}: checkpoint must carry 'config' and 'state_dict'")
    model = UNet(**payload["config"])
    try:
        model.load_state_dict(payload["state_dict"], strict=True)
    except RuntimeError as exc:
        raise ValueError(f"{path}: checkpoint/shape mismatch ({exc})") from exc
    model.to(device)
    model.eval()
    return model


def init_checkpoint(path: Path | str, seed: int = 0, **hyperparameters) -> UNet:
    """Write a freshly initialized checkpoint (a stand-in for a trained one)."""
    torch.manual_seed(seed)
    model = UNet(**hyperparameters)
    save_checkpoint(model, path)
    return model
