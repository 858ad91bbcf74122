"""Feature extractors feeding the perceptual and contextual loss terms."""

from __future__ import annotations

from pathlib import Path

import torch
import torch.nn.functional as F
from torch import nn

LAYER_NAMES = ("conv1_2", "relu3_2", "relu4_2")
IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)


def _ensure_rgb(images: torch.Tensor) -> torch.Tensor:
    if images.ndim != 4:
        raise ValueError(f"expected NCHW images, got shape {tuple(images.shape)}")
    if images.shape[1] == 1:
        return images.repeat(1, 3, 1, 1)
    if images.shape[1] == 3:
        return images
    raise ValueError(f"expected 1 or 3 channels, got {images.shape[1]}")


class IdentityExtractor:
    """Test double: every named layer is the raw image itself."""

    kind = "identity"
    layers = LAYER_NAMES

    def __call__(self, images: torch.Tensor) -> dict[str, torch.Tensor]:
        return {name: images for name in self.layers}


class RandomPyramidExtractor(nn.Module):
    """Frozen conv pyramid with seeded weights standing in for VGG-19.

    Mirrors the strides of the three named VGG layers: conv1_2 at full
    resolution, relu3_2 at 1/4, relu4_2 at 1/8. Weights are drawn once from
    a seeded generator and never trained, so the feature space is fixed and
    reproducible without any pretrained download. Single-channel inputs are
    repeated to three channels.
    """

    kind = "random-pyramid"
    layers = LAYER_NAMES

    def __init__(self, seed: int = 0, base_channels: int = 16):
        super().__init__()
        c = base_channels
        self.conv1_1 = nn.Conv2d(3, c, 3, padding=1)
        self.conv1_2 = nn.Conv2d(c, c, 3, padding=1)
        self.conv2 = nn.Conv2d(c, 2 * c, 3, padding=1)
        self.conv3 = nn.Conv2d(2 * c, 4 * c, 3, padding=1)
        self.conv4 = nn.Conv2d(4 * c, 8 * c, 3, padding=1)
        self.pool = nn.MaxPool2d(2)
        gen = torch.Generator().manual_seed(int(seed))
        with torch.no_grad():
            for param in self.parameters():
                if param.ndim > 1:
                    fan_in = param.shape[1] * param.shape[2] * param.shape[3]
                    param.normal_(0.0, (2.0 / fan_in) ** 0.5, generator=gen)
                else:
                    param.zero_()
        self.requires_grad_(False)
        self.eval()

    def forward(self, images: torch.Tensor) -> dict[str, torch.Tensor]:
        x = _ensure_rgb(images)
        x = F.relu(self.conv1_1(x))
        conv1_2 = self.conv1_2(x)
        x = self.pool(F.relu(conv1_2))
        x = self.pool(F.relu(self.conv2(x)))
        relu3_2 = F.relu(self.conv3(x))
        relu4_2 = F.relu(self.conv4(self.pool(relu3_2)))
        return {"conv1_2": conv1_2, "relu3_2": relu3_2, "relu4_2": relu4_2}


class Vgg19FeatureExtractor(nn.Module):
    """Slices of a pretrained VGG-19 loaded from a local weights file.

    Expects a state dict compatible with torchvision's vgg19 (acquire the
    file separately; no download happens here). Inputs in [-1, 1] are mapped
    to [0, 1] and normalized with ImageNet statistics before the stack.
    """

    kind = "vgg19"
    layers = LAYER_NAMES

    def __init__(self, weights_path: str | Path):
        super().__init__()
        from torchvision.models import vgg19

        path = Path(weights_path)
        if not path.is_file():
            raise FileNotFoundError(
                f"VGG-19 weights file not found: {path}; download torchvision's "
                "vgg19 state dict separately and point extractor_weights at it"
            )
        net = vgg19(weights=None)
        state = torch.load(path, map_location="cpu", weights_only=True)
        net.load_state_dict(state)
        # feature indices: conv1_2 ends at 2, relu3_2 at 13, relu4_2 at 22
        self.to_conv1_2 = net.features[:3]
        self.to_relu3_2 = net.features[3:14]
        self.to_relu4_2 = net.features[14:23]
        self.register_buffer("mean", torch.tensor(IMAGENET_MEAN).view(1, 3, 1, 1))
        self.register_buffer("std", torch.tensor(IMAGENET_STD).view(1, 3, 1, 1))
        self.requires_grad_(False)
        self.eval()

    def forward(self, images: torch.Tensor) -> dict[str, torch.Tensor]:
        x = _ensure_rgb(images)
        x = ((x + 1.0) / 2.0 - self.mean) / self.std
        conv1_2 = self.to_conv1_2(x)
        relu3_2 = self.to_relu3_2(conv1_2)
        relu4_2 = self.to_relu4_2(relu3_2)
        return {"conv1_2": conv1_2, "relu3_2": relu3_2, "relu4_2": relu4_2}


def load_feature_extractor(name: str, weights_path: str | Path | None = None, seed: int = 0):
    if name == "random-pyramid":
        return RandomPyramidExtractor(seed=seed)
    if name == "vgg19":
        if weights_path is None:
            raise ValueError("vgg19 extractor needs a local weights file (extractor_weights)")
        return Vgg19FeatureExtractor(weights_path)
    if name == "identity":
        return IdentityExtractor()
    raise ValueError(f"unknown feature extractor {name!r}")
