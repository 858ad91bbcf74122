"""Shared model utilities: seeded init, instance statistics, resampling."""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn

from ..config import fingerprint

LEAKY_SLOPE = 0.2


def seeded_init_(module: nn.Module, seed: int) -> nn.Module:
    """Deterministically (re)initialize all parameters of ``module`` in place.

    Weights with two or more dims draw from N(0, 0.02) using a dedicated
    generator in named_parameters() order, so equal (architecture, seed)
    pairs yield identical parameters. One-dim norm scales go to 1, biases to
    0; submodules defining ``reset_special_parameters()`` may then override
    selected values (e.g. modulation biases).
    """
    gen = torch.Generator().manual_seed(int(seed))
    with torch.no_grad():
        for name, param in module.named_parameters():
            if param.ndim > 1:
                param.normal_(0.0, 0.02, generator=gen)
            elif name.rsplit(".", 1)[-1] == "weight":
                param.fill_(1.0)
            else:
                param.zero_()
    for sub in module.modules():
        hook = getattr(sub, "reset_special_parameters", None)
        if hook is not None:
            hook()
    return module


def instance_stats(features: torch.Tensor, eps: float = 0.0) -> tuple[torch.Tensor, torch.Tensor]:
    """Spatial mean and population std per (sample, channel) of an NCHW map.

    The variance (mean of squares minus squared mean) is clamped at zero
    before ``eps`` is added under the square root, so constant channels give
    sigma == sqrt(eps) rather than NaN.
    """
    if features.ndim != 4:
        raise ValueError(f"expected NCHW features, got shape {tuple(features.shape)}")
    u = features.mean(dim=(2, 3), keepdim=True)
    var = features.pow(2).mean(dim=(2, 3), keepdim=True) - u.pow(2)
    sigma = (var.clamp_min(0.0) + eps).sqrt()
    return u, sigma


def resample_to(x: torch.Tensor, height: int, width: int) -> torch.Tensor:
    """Nearest-neighbor resample of an NCHW tensor to height x width.

    Nearest keeps heatmap peaks and hard edge transitions intact, which is
    why conditioning maps use it on the way into modulation convs.
    """
    if x.shape[-2:] == (height, width):
        return x
    return F.interpolate(x, size=(height, width), mode="nearest")


def finish_build(module: nn.Module, config, seed: int) -> nn.Module:
    """Seeded init plus the identity stamps checkpointing verifies against."""
    seeded_init_(module, seed)
    module.build_seed = int(seed)
    module.config_fingerprint = fingerprint(config)
    return module
