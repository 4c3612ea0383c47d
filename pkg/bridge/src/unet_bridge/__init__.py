"""Bridge between a pretrained U-Net and the prototype segmentation toolkit.

Exports penultimate-layer activations of a U-Net checkpoint as BST1
latent-feature files, and converts multiband GeoTIFFs into BST1 stacks.
The bridge talks to the main toolkit only through those files.
"""

from unet_bridge.bst1 import read_bst1, write_bst1
from unet_bridge.export import BridgeConfig, export_features
from unet_bridge.geotiff import convert_geotiff
from unet_bridge.unet import UNet, load_checkpoint, save_checkpoint

__all__ = [
    "BridgeConfig",
    "UNet",
    "convert_geotiff",
    "export_features",
    "load_checkpoint",
    "read_bst1",
    "save_checkpoint",
    "write_bst1",
]
