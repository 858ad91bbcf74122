"""Spatially adaptive conditional normalization units."""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn

from .common import LEAKY_SLOPE, instance_stats, resample_to


class SpatialAdaptiveNorm(nn.Module):
    """Conditional renormalization: Conv(LReLU(gamma(S) * IN(f) + beta(S))).

    S can be any spatial conditioning map (style features, pose heatmap, edge
    map); it is nearest-resampled to f's dims before the modulation convs.
    gamma multiplies the normalized map directly, so the conv producing it is
    bias-initialized to 1 for an identity-like start.
    """

    def __init__(
        self,
        feature_channels: int,
        cond_channels: int,
        hidden_channels: int = 64,
        out_channels: int | None = None,
        eps: float = 1e-5,
        mix_bias: bool = True,
    ):
        super().__init__()
        if out_channels is None:
            out_channels = feature_channels
        self.eps = float(eps)
        self.shared = nn.Conv2d(cond_channels, hidden_channels, 3, padding=1)
        self.to_gamma = nn.Conv2d(hidden_channels, feature_channels, 3, padding=1)
        self.to_beta = nn.Conv2d(hidden_channels, feature_channels, 3, padding=1)
        # callers whose output is consumed only by another instance
        # normalization pass mix_bias=False: a per-channel constant would be
        # subtracted right back out, leaving a parameter with zero gradient
        self.mix = nn.Conv2d(feature_channels, out_channels, 3, padding=1, bias=mix_bias)

    def reset_special_parameters(self):
        with torch.no_grad():
            self.to_gamma.bias.fill_(1.0)

    def demodulate(self, features: torch.Tensor, cond: torch.Tensor) -> torch.Tensor:
        """The pre-conv activation gamma(S) * IN(f) + beta(S)."""
        if features.ndim != 4 or cond.ndim != 4:
            raise ValueError("features and conditioning must both be NCHW")
        if features.shape[1] != self.to_gamma.out_channels:
            raise ValueError(
                f"feature channels {features.shape[1]} do not match "
                f"modulation channels {self.to_gamma.out_channels}"
            )
        if cond.shape[1] != self.shared.in_channels:
            raise ValueError(
                f"conditioning channels {cond.shape[1]} do not match "
                f"expected {self.shared.in_channels}"
            )
        cond = resample_to(cond, features.shape[-2], features.shape[-1])
        u, sigma = instance_stats(features, self.eps)
        normalized = (features - u) / sigma
        hidden = F.leaky_relu(self.shared(cond), LEAKY_SLOPE)
        return self.to_gamma(hidden) * normalized + self.to_beta(hidden)

    def forward(self, features: torch.Tensor, cond: torch.Tensor) -> torch.Tensor:
        return self.mix(F.leaky_relu(self.demodulate(features, cond), LEAKY_SLOPE))


class SpadeResBlock(nn.Module):
    """Residual block built from two adaptive norm units (decoder ablation).

    Both units see the same conditioning map; a 1x1 conv aligns the shortcut
    when the channel count changes.
    """

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        cond_channels: int,
        hidden_channels: int = 64,
        eps: float = 1e-5,
    ):
        super().__init__()
        mid = min(in_channels, out_channels)
        # unit1 feeds only unit2's instance norm, so its mix bias would be dead
        self.unit1 = SpatialAdaptiveNorm(
            in_channels, cond_channels, hidden_channels, mid, eps, mix_bias=False
        )
        self.unit2 = SpatialAdaptiveNorm(mid, cond_channels, hidden_channels, out_channels, eps)
        if in_channels != out_channels:
            self.skip = nn.Conv2d(in_channels, out_channels, 1, bias=False)
        else:
            self.skip = nn.Identity()

    def forward(self, features: torch.Tensor, cond: torch.Tensor) -> torch.Tensor:
        return self.unit2(self.unit1(features, cond), cond) + self.skip(features)
