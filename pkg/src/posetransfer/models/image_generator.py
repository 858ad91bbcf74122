"""Phase-2 generator: style encoder plus coarse-to-fine adaptive decoder."""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn

from ..config import ImageGeneratorConfig
from .common import LEAKY_SLOPE, finish_build, resample_to
from .norm import SpadeResBlock, SpatialAdaptiveNorm


def _make_norm(kind: str, channels: int) -> nn.Module:
    if kind == "batch":
        return nn.BatchNorm2d(channels)
    if kind == "instance":
        return nn.InstanceNorm2d(channels)
    raise ValueError(f"unknown encoder norm {kind!r}")


class StyleEncoderBlock(nn.Module):
    """Three 3x3 convs with LeakyReLU plus a strided 1x1 shortcut.

    The default build contains no normalization layer at all; ``norm`` exists
    only for the encoder-norm ablations. Each block halves the spatial dims
    exactly once (first conv and shortcut are stride 2).
    """

    def __init__(self, in_channels: int, out_channels: int, norm: str = "none"):
        super().__init__()
        bias = norm == "none"
        self.conv1 = nn.Conv2d(in_channels, out_channels, 3, stride=2, padding=1, bias=bias)
        self.conv2 = nn.Conv2d(out_channels, out_channels, 3, padding=1, bias=bias)
        self.conv3 = nn.Conv2d(out_channels, out_channels, 3, padding=1, bias=bias)
        self.shortcut = nn.Conv2d(in_channels, out_channels, 1, stride=2)
        if norm == "none":
            self.norms = None
            per_conv = ["conv", "activation"]
        else:
            self.norms = nn.ModuleList(_make_norm(norm, out_channels) for _ in range(3))
            per_conv = ["conv", "norm", "activation"]
        # kinds of computation in execution order, for the no-norm assertion
        self.layer_kinds = per_conv * 3 + ["conv", "add"]

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        y = x
        for i, conv in enumerate((self.conv1, self.conv2, self.conv3)):
            y = conv(y)
            if self.norms is not None:
                y = self.norms[i](y)
            y = F.leaky_relu(y, LEAKY_SLOPE)
        return y + self.shortcut(x)


class StyleEncoder(nn.Module):
    """Stack of downsampling blocks capturing the reference appearance.

    Deliberately normalization-free by default so absolute color statistics
    of the source survive into the deepest feature map.
    """

    def __init__(self, in_channels: int, widths: list[int], norm: str = "none"):
        super().__init__()
        blocks = []
        prev = in_channels
        for width in widths:
            blocks.append(StyleEncoderBlock(prev, width, norm=norm))
            prev = width
        self.blocks = nn.ModuleList(blocks)

    def layer_registry(self) -> list[str]:
        """Execution-ordered computation kinds over all blocks."""
        kinds: list[str] = []
        for block in self.blocks:
            kinds.extend(block.layer_kinds)
        return kinds

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        d = 2 ** len(self.blocks)
        if x.shape[-2] % d or x.shape[-1] % d:
            raise ValueError(
                f"encoder input dims {tuple(x.shape[-2:])} not divisible by {d} "
                f"({len(self.blocks)} downsampling blocks)"
            )
        for block in self.blocks:
            x = block(x)
        return x


class ContentStyleBlock(nn.Module):
    """One coarse-to-fine decoder level.

    A style-conditioned unit demodulates the incoming features once; its
    output is shared by a content branch and a pose branch whose results are
    summed, then upsampled 2x into the next level. ``content_channels=0``
    drops the content branch entirely.
    """

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        style_channels: int,
        content_channels: int,
        pose_channels: int,
        hidden_channels: int = 64,
        eps: float = 1e-5,
        last_level: bool = False,
    ):
        super().__init__()
        # the shared map feeds two instance norms, and on every level but the
        # last the branch sum feeds the next level's instance norm, so those
        # mix biases would never receive gradient
        self.style_unit = SpatialAdaptiveNorm(
            in_channels, style_channels, hidden_channels, in_channels, eps, mix_bias=False
        )
        if content_channels > 0:
            self.content_unit = SpatialAdaptiveNorm(
                in_channels, content_channels, hidden_channels, out_channels, eps,
                mix_bias=last_level,
            )
        else:
            self.content_unit = None
        self.pose_unit = SpatialAdaptiveNorm(
            in_channels, pose_channels, hidden_channels, out_channels, eps,
            mix_bias=last_level,
        )

    def branch_outputs(
        self,
        x: torch.Tensor,
        style: torch.Tensor,
        content: torch.Tensor | None,
        pose: torch.Tensor,
    ) -> tuple[torch.Tensor | None, torch.Tensor]:
        """(content branch, pose branch) before summation and upsampling."""
        shared = self.style_unit(x, style)
        u = self.content_unit(shared, content) if self.content_unit is not None else None
        v = self.pose_unit(shared, pose)
        return u, v

    def forward(
        self,
        x: torch.Tensor,
        style: torch.Tensor,
        content: torch.Tensor | None,
        pose: torch.Tensor,
    ) -> torch.Tensor:
        u, v = self.branch_outputs(x, style, content, pose)
        y = v if u is None else u + v
        return F.interpolate(y, scale_factor=2, mode="nearest")


class SpadeLevel(nn.Module):
    """Ablation decoder level: one residual modulated block, then upsample.

    Style, content and pose are resampled to the feature dims and
    concatenated into a single conditioning map.
    """

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        style_channels: int,
        content_channels: int,
        pose_channels: int,
        hidden_channels: int = 64,
        eps: float = 1e-5,
    ):
        super().__init__()
        cond_channels = style_channels + content_channels + pose_channels
        self.block = SpadeResBlock(in_channels, out_channels, cond_channels, hidden_channels, eps)

    def forward(
        self,
        x: torch.Tensor,
        style: torch.Tensor,
        content: torch.Tensor | None,
        pose: torch.Tensor,
    ) -> torch.Tensor:
        height, width = x.shape[-2:]
        parts = [resample_to(style, height, width)]
        if content is not None:
            parts.append(resample_to(content, height, width))
        parts.append(resample_to(pose, height, width))
        y = self.block(x, torch.cat(parts, dim=1))
        return F.interpolate(y, scale_factor=2, mode="nearest")


def _padding_to_multiple(height: int, width: int, mult: int) -> tuple[int, int, int, int]:
    """Symmetric (left, right, top, bottom) padding up to the next multiple."""
    pad_h = (-height) % mult
    pad_w = (-width) % mult
    top, left = pad_h // 2, pad_w // 2
    return (left, pad_w - left, top, pad_h - top)


class ImageGenerator(nn.Module):
    """Synthesizes a person image from source style, content map and target pose.

    The decoder starts from seeded Gaussian noise at the coarsest level and
    grows it through one decoder level per encoder block; a final wide-kernel
    conv plus tanh produces the image in [-1, 1]. Inputs whose dims are not a
    multiple of 2**num_levels are reflect-padded and the output cropped back.
    """

    def __init__(self, config: ImageGeneratorConfig):
        super().__init__()
        config.validate()
        self.config = config
        widths = config.channel_schedule()
        self.encoder = StyleEncoder(config.image_channels, widths, config.encoder_norm)
        ins = list(reversed(widths))
        outs = ins[1:] + [ins[-1]]
        levels = []
        for i, (cin, cout) in enumerate(zip(ins, outs)):
            common = (
                cin,
                cout,
                widths[-1],
                config.content_channels(),
                config.pose_channels,
                config.spade_hidden_channels,
                config.norm_eps,
            )
            if config.decoder_block == "spade-resblk":
                levels.append(SpadeLevel(*common))
            else:
                levels.append(ContentStyleBlock(*common, last_level=i == len(ins) - 1))
        self.levels = nn.ModuleList(levels)
        self.to_image = nn.Conv2d(outs[-1], config.image_channels, 7, padding=3)

    def forward(
        self,
        source_image: torch.Tensor,
        content: torch.Tensor | None,
        target_pose: torch.Tensor,
        z0_seed: int,
    ) -> torch.Tensor:
        cfg = self.config
        height, width = source_image.shape[-2:]
        if target_pose.shape[-2:] != (height, width):
            raise ValueError("pose and source image spatial dims differ")
        if target_pose.shape[1] != cfg.pose_channels:
            raise ValueError(f"expected {cfg.pose_channels} pose channels, got {target_pose.shape[1]}")
        expected = cfg.content_channels()
        if expected == 0:
            if content is not None:
                raise ValueError("content branch is disabled, pass content=None")
        else:
            if content is None:
                raise ValueError(f"content map with {expected} channels required")
            if content.shape[1] != expected:
                raise ValueError(f"expected {expected} content channels, got {content.shape[1]}")
            if content.shape[-2:] != (height, width):
                raise ValueError("content and source image spatial dims differ")

        pad = _padding_to_multiple(height, width, 2 ** len(self.levels))
        if any(pad):
            source_image = F.pad(source_image, pad, mode="reflect")
            target_pose = F.pad(target_pose, pad, mode="reflect")
            if content is not None:
                content = F.pad(content, pad, mode="reflect")
        style = self.encoder(source_image)
        gen = torch.Generator().manual_seed(int(z0_seed))
        x = torch.randn(style.shape, generator=gen, dtype=style.dtype)
        for level in self.levels:
            x = level(x, style, content, target_pose)
        out = torch.tanh(self.to_image(x))
        if any(pad):
            left, _, top, _ = pad
            out = out[:, :, top : top + height, left : left + width]
        return out


def build_image_generator(config: ImageGeneratorConfig, seed: int) -> ImageGenerator:
    return finish_build(ImageGenerator(config), config, seed)
