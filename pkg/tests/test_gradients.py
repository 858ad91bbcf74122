"""Central-difference checks of every differentiable building block.

Everything runs in double precision on tiny inputs. Tensors with few entries
are covered coordinate by coordinate; network parameters are covered by a
seeded sample of coordinates per tensor to keep the whole module fast.
"""

import torch

from posetransfer.config import DiscriminatorConfig, EdgeGeneratorConfig, ImageGeneratorConfig
from posetransfer.features import RandomPyramidExtractor
from posetransfer.losses import (
    adv_loss_discriminator,
    adv_loss_generator,
    contextual_loss,
    l1_loss,
    perceptual_loss,
)
from posetransfer.models import (
    SpatialAdaptiveNorm,
    build_discriminator,
    build_edge_generator,
    build_image_generator,
    seeded_init_,
)

from oracles import check_gradients

REL_TOL = 1e-3


def projection(shape, seed):
    g = torch.Generator().manual_seed(seed)
    return torch.randn(shape, generator=g, dtype=torch.float64)


def leaf(shape, seed, scale=1.0):
    g = torch.Generator().manual_seed(seed)
    return (torch.randn(shape, generator=g, dtype=torch.float64) * scale).requires_grad_(True)


def named_params(module, prefix):
    return {f"{prefix}.{name}": p for name, p in module.named_parameters() if p.requires_grad}


def randomize_params(module, seed, scale=0.3):
    """Move to a generic parameter point with O(1) activations.

    The zero-mean std-0.02 training init leaves a deep net's activations
    around 1e-4, where +-eps probes straddle LeakyReLU kinks and central
    differences stop matching the one-sided derivative autograd reports.
    Differentiation correctness is parameter-independent, so check it away
    from the kinks.
    """
    g = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for p in module.parameters():
            p.copy_(torch.randn(p.shape, generator=g, dtype=p.dtype) * scale)


def check_adaptive_norm_gradients():
    m = SpatialAdaptiveNorm(feature_channels=3, cond_channels=2, hidden_channels=4).double()
    seeded_init_(m, 0)
    f = leaf((1, 3, 6, 6), seed=1)
    cond = leaf((1, 2, 6, 6), seed=2)
    r = projection((1, 3, 6, 6), seed=3)

    def scalar():
        return (m(f, cond) * r).sum()

    tensors = {"features": f, "cond": cond, **named_params(m, "unit")}
    return check_gradients(scalar, tensors, rel_tol=REL_TOL)


def check_l1_gradients():
    x = leaf((1, 3, 8, 8), seed=4)
    y = leaf((1, 3, 8, 8), seed=5)
    return check_gradients(lambda: l1_loss(x, y), {"generated": x, "target": y}, rel_tol=REL_TOL)


def check_perceptual_gradients():
    ex = RandomPyramidExtractor(seed=0, base_channels=4).double()
    x = leaf((1, 3, 8, 8), seed=6)
    y = leaf((1, 3, 8, 8), seed=7)
    return check_gradients(lambda: perceptual_loss(x, y, ex), {"generated": x, "target": y}, rel_tol=REL_TOL)


def check_contextual_gradients():
    ex = RandomPyramidExtractor(seed=0, base_channels=4).double()
    x = leaf((1, 3, 8, 8), seed=8)
    y = leaf((1, 3, 8, 8), seed=9, scale=0.7)

    def scalar():
        return contextual_loss(x, y, ex)

    return check_gradients(scalar, {"generated": x}, rel_tol=REL_TOL)


def tiny_discriminators():
    cfg_s = DiscriminatorConfig(condition_channels=1, image_channels=1, base_channels=4, num_downsamples=1, num_residual_blocks=1)
    cfg_c = DiscriminatorConfig(condition_channels=2, image_channels=1, base_channels=4, num_downsamples=1, num_residual_blocks=1)
    return build_discriminator(cfg_s, seed=1).double(), build_discriminator(cfg_c, seed=2).double()


def check_adversarial_generator_gradients():
    style, pose = tiny_discriminators()
    cond_s = projection((1, 1, 8, 8), seed=10)
    cond_c = projection((1, 2, 8, 8), seed=11)
    fake = leaf((1, 1, 8, 8), seed=12)

    def scalar():
        return adv_loss_generator(style, pose, cond_s, cond_c, fake)

    return check_gradients(scalar, {"fake": fake}, rel_tol=REL_TOL, limit_per_tensor=64)


def check_adversarial_discriminator_gradients():
    style, pose = tiny_discriminators()
    cond_s = projection((1, 1, 8, 8), seed=13)
    cond_c = projection((1, 2, 8, 8), seed=14)
    real = projection((1, 1, 8, 8), seed=15)
    fake = projection((1, 1, 8, 8), seed=16)

    def scalar():
        return adv_loss_discriminator(style, pose, cond_s, cond_c, real, fake)

    tensors = {**named_params(style, "style"), **named_params(pose, "pose")}
    return check_gradients(scalar, tensors, rel_tol=REL_TOL, limit_per_tensor=8)


def check_miniature_image_generator_gradients():
    cfg = ImageGeneratorConfig(
        num_levels=2,
        base_channels=4,
        max_channels=8,
        spade_hidden_channels=4,
        content_source="prior-edge",
    )
    m = build_image_generator(cfg, seed=0).double()
    randomize_params(m, seed=100)
    src = leaf((1, 3, 8, 8), seed=17, scale=0.5)
    content = leaf((1, 1, 8, 8), seed=18, scale=0.5)
    pose = leaf((1, 18, 8, 8), seed=19, scale=0.5)
    r = projection((1, 3, 8, 8), seed=20)

    def scalar():
        return (m(src, content, pose, z0_seed=21) * r).sum()

    tensors = {"source": src, "content": content, "pose": pose, **named_params(m, "gen")}
    return check_gradients(scalar, tensors, rel_tol=REL_TOL, limit_per_tensor=6, eps=1e-7)


def check_miniature_edge_generator_gradients():
    cfg = EdgeGeneratorConfig(base_channels=4, num_residual_blocks=1)
    m = build_edge_generator(cfg, seed=0).double()
    randomize_params(m, seed=101, scale=0.1)
    edge = leaf((1, 1, 8, 8), seed=22, scale=0.5)
    pose_s = leaf((1, 18, 8, 8), seed=23, scale=0.5)
    pose_t = leaf((1, 18, 8, 8), seed=24, scale=0.5)
    r = projection((1, 1, 8, 8), seed=25)

    def scalar():
        return (m(edge, pose_s, pose_t) * r).sum()

    tensors = {"edge": edge, "pose_s": pose_s, "pose_t": pose_t, **named_params(m, "gen")}
    return check_gradients(scalar, tensors, rel_tol=REL_TOL, limit_per_tensor=6, eps=1e-7)


def test_adaptive_norm_gradients():
    assert check_adaptive_norm_gradients() < REL_TOL


def test_l1_gradients():
    assert check_l1_gradients() < REL_TOL


def test_perceptual_gradients():
    assert check_perceptual_gradients() < REL_TOL


def test_contextual_gradients():
    assert check_contextual_gradients() < REL_TOL


def test_adversarial_generator_gradients():
    assert check_adversarial_generator_gradients() < REL_TOL


def test_adversarial_discriminator_gradients():
    assert check_adversarial_discriminator_gradients() < REL_TOL


def test_miniature_image_generator_gradients():
    assert check_miniature_image_generator_gradients() < REL_TOL


def test_miniature_edge_generator_gradients():
    assert check_miniature_edge_generator_gradients() < REL_TOL
