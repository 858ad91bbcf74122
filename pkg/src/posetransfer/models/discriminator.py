"""Conditional patch discriminators for both training phases."""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn

from ..config import DiscriminatorConfig
from .common import LEAKY_SLOPE, finish_build


class PlainResidualBlock(nn.Module):
    """Residual conv pair without any normalization."""

    def __init__(self, channels: int):
        super().__init__()
        self.conv1 = nn.Conv2d(channels, channels, 3, padding=1)
        self.conv2 = nn.Conv2d(channels, channels, 3, padding=1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return x + self.conv2(F.leaky_relu(self.conv1(x), LEAKY_SLOPE))


class PatchDiscriminator(nn.Module):
    """Scores (condition, image) pairs with a sigmoid patch map.

    Strided 4x4 convs downsample, residual blocks deepen, and a closing conv
    reduces to one channel. The spatial map is kept; the losses take its mean
    as the scalar realness score.
    """

    def __init__(self, config: DiscriminatorConfig):
        super().__init__()
        config.validate()
        self.config = config
        layers: list[nn.Module] = []
        cin = config.condition_channels + config.image_channels
        ch = config.base_channels
        for _ in range(config.num_downsamples):
            layers += [nn.Conv2d(cin, ch, 4, stride=2, padding=1), nn.LeakyReLU(LEAKY_SLOPE)]
            cin, ch = ch, ch * 2
        self.down = nn.Sequential(*layers)
        self.res_blocks = nn.Sequential(*(PlainResidualBlock(cin) for _ in range(config.num_residual_blocks)))
        self.to_score = nn.Conv2d(cin, 1, 3, padding=1)

    def forward(self, condition: torch.Tensor, image: torch.Tensor) -> torch.Tensor:
        if condition.shape[-2:] != image.shape[-2:]:
            raise ValueError(
                f"condition dims {tuple(condition.shape[-2:])} and image dims "
                f"{tuple(image.shape[-2:])} differ"
            )
        expected = self.config.condition_channels + self.config.image_channels
        x = torch.cat([condition, image], dim=1)
        if x.shape[1] != expected:
            raise ValueError(f"expected {expected} concatenated channels, got {x.shape[1]}")
        return torch.sigmoid(self.to_score(self.res_blocks(self.down(x))))


def build_discriminator(config: DiscriminatorConfig, seed: int) -> PatchDiscriminator:
    return finish_build(PatchDiscriminator(config), config, seed)
