"""The four training loss terms and their weighted combination.

Both training phases share these functions; phase 1 passes edge maps where
phase 2 passes person images. Discriminator scores are the mean of the patch
map, and every log is clamped at 1e-12 so saturated discriminators cannot
produce infinities.
"""

from __future__ import annotations

import torch

from .config import LossWeights

LOG_CLAMP = 1e-12
CX_BANDWIDTH = 0.5
CX_MIN_EPS = 1e-5
CX_MAX_POSITIONS = 65 * 65
TERM_ORDER = ("adversarial", "l1", "perceptual", "contextual")


def _safe_log(x: torch.Tensor) -> torch.Tensor:
    return torch.log(torch.clamp(x, min=LOG_CLAMP))


def _check_finite(**tensors: torch.Tensor):
    for name, value in tensors.items():
        if not torch.isfinite(value).all():
            raise FloatingPointError(f"non-finite values in {name}")


def adv_loss_discriminator(
    style_disc,
    pose_disc,
    style_cond: torch.Tensor,
    pose_cond: torch.Tensor,
    real: torch.Tensor,
    fake: torch.Tensor,
) -> torch.Tensor:
    """Negated two-critic value function, minimized by the discriminators.

    The generated sample is detached here, so only critic parameters receive
    gradients from this term.
    """
    _check_finite(style_cond=style_cond, pose_cond=pose_cond, real=real, fake=fake)
    fake = fake.detach()
    value = (
        _safe_log(style_disc(style_cond, real).mean())
        + _safe_log(1.0 - style_disc(style_cond, fake).mean())
        + _safe_log(pose_disc(pose_cond, real).mean())
        + _safe_log(1.0 - pose_disc(pose_cond, fake).mean())
    )
    return -value


def adv_loss_generator(
    style_disc,
    pose_disc,
    style_cond: torch.Tensor,
    pose_cond: torch.Tensor,
    fake: torch.Tensor,
) -> torch.Tensor:
    """Non-saturating generator objective over both discriminators."""
    _check_finite(style_cond=style_cond, pose_cond=pose_cond, fake=fake)
    value = _safe_log(style_disc(style_cond, fake).mean()) + _safe_log(pose_disc(pose_cond, fake).mean())
    return -value


def l1_loss(generated: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """Mean absolute difference, averaged over batch and all elements."""
    if generated.shape != target.shape:
        raise ValueError(f"shape mismatch: {tuple(generated.shape)} vs {tuple(target.shape)}")
    return (generated - target).abs().mean()


def _layer_features(extractor, images: torch.Tensor, layer: str) -> torch.Tensor:
    features = extractor(images)
    if layer not in features:
        raise ValueError(f"feature extractor {getattr(extractor, 'kind', '?')!r} lacks layer {layer!r}")
    return features[layer]


def perceptual_loss(generated: torch.Tensor, target: torch.Tensor, extractor) -> torch.Tensor:
    """Mean absolute difference of shallow (conv1_2) features."""
    if generated.shape != target.shape:
        raise ValueError(f"shape mismatch: {tuple(generated.shape)} vs {tuple(target.shape)}")
    return (_layer_features(extractor, generated, "conv1_2") - _layer_features(extractor, target, "conv1_2")).abs().mean()


def cx_similarity(
    features_a: torch.Tensor,
    features_b: torch.Tensor,
    bandwidth: float = CX_BANDWIDTH,
    eps: float = CX_MIN_EPS,
) -> torch.Tensor:
    """Soft assignment matrix between two feature sets, rows of shape (Pa, Pb).

    Both sets are centered by the second set's channel mean; cosine distances
    are rescaled row-wise by their minimum and pushed through an exp with
    temperature ``bandwidth``, then row-normalized so each row sums to 1.
    """
    if features_a.ndim != 2 or features_b.ndim != 2:
        raise ValueError("feature sets must be 2-D (positions x channels)")
    if features_a.shape[0] == 0 or features_b.shape[0] == 0:
        raise ValueError("empty feature set")
    if features_a.shape[1] != features_b.shape[1]:
        raise ValueError(f"channel mismatch: {features_a.shape[1]} vs {features_b.shape[1]}")
    center = features_b.mean(dim=0, keepdim=True)
    a = features_a - center
    b = features_b - center
    a = a / a.norm(dim=1, keepdim=True).clamp_min(LOG_CLAMP)
    b = b / b.norm(dim=1, keepdim=True).clamp_min(LOG_CLAMP)
    dist = 1.0 - a @ b.t()
    rel = dist / (dist.min(dim=1, keepdim=True).values + eps)
    w = torch.exp((1.0 - rel) / bandwidth)
    return w / w.sum(dim=1, keepdim=True)


def contextual_loss(
    generated: torch.Tensor,
    target: torch.Tensor,
    extractor,
    bandwidth: float = CX_BANDWIDTH,
    max_positions: int = CX_MAX_POSITIONS,
    seed: int = 0,
) -> torch.Tensor:
    """Set-similarity loss over mid-depth features (relu3_2 + relu4_2).

    Per layer and sample: every target position is softly matched to its best
    generated position and the mean match quality is log-penalized. Feature
    maps larger than ``max_positions`` are subsampled at seeded random
    positions, the same positions for both maps.
    """
    if generated.shape != target.shape:
        raise ValueError(f"shape mismatch: {tuple(generated.shape)} vs {tuple(target.shape)}")
    feats_g = extractor(generated)
    feats_t = extractor(target)
    total = None
    for layer in ("relu3_2", "relu4_2"):
        if layer not in feats_g or layer not in feats_t:
            raise ValueError(f"feature extractor {getattr(extractor, 'kind', '?')!r} lacks layer {layer!r}")
        fg, ft = feats_g[layer], feats_t[layer]
        per_sample = []
        for n in range(fg.shape[0]):
            a = fg[n].flatten(1).t()
            b = ft[n].flatten(1).t()
            if a.shape[0] > max_positions:
                gen = torch.Generator().manual_seed(int(seed))
                idx = torch.randperm(a.shape[0], generator=gen)[:max_positions]
                a, b = a[idx], b[idx]
            cx = cx_similarity(a, b, bandwidth)
            per_sample.append(-_safe_log(cx.max(dim=0).values.mean()))
        layer_loss = torch.stack(per_sample).mean()
        total = layer_loss if total is None else total + layer_loss
    return total


def full_loss(terms: dict[str, torch.Tensor], weights: LossWeights) -> tuple[torch.Tensor, dict[str, float]]:
    """Weighted sum of the four terms plus a float breakdown for logging."""
    unknown = set(terms) - set(TERM_ORDER)
    if unknown:
        raise ValueError(f"unknown loss terms: {sorted(unknown)}")
    missing = [name for name in TERM_ORDER if name not in terms]
    if missing:
        raise ValueError(f"missing loss terms: {missing}")
    scale = {
        "adversarial": weights.adversarial,
        "l1": weights.l1,
        "perceptual": weights.perceptual,
        "contextual": weights.contextual,
    }
    breakdown: dict[str, float] = {}
    total = None
    for name in TERM_ORDER:
        value = terms[name]
        if not torch.isfinite(value):
            raise FloatingPointError(f"loss term {name!r} is not finite")
        breakdown[name] = float(value.detach())
        piece = scale[name] * value
        total = piece if total is None else total + piece
    breakdown["total"] = float(total.detach())
    return total, breakdown
