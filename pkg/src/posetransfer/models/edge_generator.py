"""Phase-1 generator: transfers source edge content onto a target pose."""

from __future__ import annotations

import torch
from torch import nn

from ..config import EdgeGeneratorConfig
from .common import finish_build


class ResidualBlock(nn.Module):
    """Two 3x3 convs with instance norm and an identity skip."""

    def __init__(self, channels: int):
        super().__init__()
        self.block = nn.Sequential(
            nn.Conv2d(channels, channels, 3, padding=1, bias=False),
            nn.InstanceNorm2d(channels),
            nn.ReLU(inplace=True),
            nn.Conv2d(channels, channels, 3, padding=1, bias=False),
            nn.InstanceNorm2d(channels),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return x + self.block(x)


class EdgeGenerator(nn.Module):
    """Maps (source edge, source pose, target pose) to a transferred edge map.

    Encoder-decoder with a residual bottleneck: strided downsampling convs,
    a stack of residual blocks, nearest-upsample + conv stages, and a final
    wide-kernel conv. The output is squashed to the open interval (0, 1) via
    (tanh + 1) / 2.
    """

    def __init__(self, config: EdgeGeneratorConfig):
        super().__init__()
        config.validate()
        self.config = config
        widths = config.channel_schedule()
        layers: list[nn.Module] = [
            nn.Conv2d(config.input_channels, widths[0], 7, padding=3, bias=False),
            nn.InstanceNorm2d(widths[0]),
            nn.ReLU(inplace=True),
        ]
        for cin, cout in zip(widths[:-1], widths[1:]):
            layers += [
                nn.Conv2d(cin, cout, 3, stride=2, padding=1, bias=False),
                nn.InstanceNorm2d(cout),
                nn.ReLU(inplace=True),
            ]
        layers += [ResidualBlock(widths[-1]) for _ in range(config.num_residual_blocks)]
        for cin, cout in zip(widths[:0:-1], widths[-2::-1]):
            layers += [
                nn.Upsample(scale_factor=2, mode="nearest"),
                nn.Conv2d(cin, cout, 3, padding=1, bias=False),
                nn.InstanceNorm2d(cout),
                nn.ReLU(inplace=True),
            ]
        layers.append(nn.Conv2d(widths[0], config.output_channels, 7, padding=3))
        self.layers = nn.Sequential(*layers)

    def forward(
        self,
        source_edge: torch.Tensor,
        source_pose: torch.Tensor,
        target_pose: torch.Tensor,
    ) -> torch.Tensor:
        if not (source_edge.shape[-2:] == source_pose.shape[-2:] == target_pose.shape[-2:]):
            raise ValueError(
                "edge and pose inputs must share spatial dims, got "
                f"{tuple(source_edge.shape[-2:])}, {tuple(source_pose.shape[-2:])}, "
                f"{tuple(target_pose.shape[-2:])}"
            )
        x = torch.cat([source_edge, source_pose, target_pose], dim=1)
        if x.shape[1] != self.config.input_channels:
            raise ValueError(
                f"concatenated inputs have {x.shape[1]} channels, "
                f"config expects {self.config.input_channels}"
            )
        d = 2 ** self.config.num_downsamples
        if x.shape[-2] % d or x.shape[-1] % d:
            raise ValueError(f"spatial dims {tuple(x.shape[-2:])} must be divisible by {d}")
        return (torch.tanh(self.layers(x)) + 1.0) / 2.0


def build_edge_generator(config: EdgeGeneratorConfig, seed: int) -> EdgeGenerator:
    return finish_build(EdgeGenerator(config), config, seed)
