import math

import pytest
import torch
from torch import nn

from posetransfer.models import finish_build, instance_stats, resample_to, seeded_init_


def test_instance_stats_hand_computed():
    # channel values {1,2,3,4}: mean 2.5, population variance 1.25
    f = torch.tensor([[[[1.0, 2.0], [3.0, 4.0]]]])
    u, sigma = instance_stats(f, eps=0.0)
    assert u.shape == (1, 1, 1, 1)
    assert u.item() == 2.5
    assert sigma.item() == pytest.approx(math.sqrt(1.25), abs=1e-7)


def test_instance_stats_per_channel_and_sample():
    g = torch.Generator().manual_seed(0)
    f = torch.randn(3, 4, 8, 8, generator=g)
    u, sigma = instance_stats(f, eps=0.0)
    assert u.shape == (3, 4, 1, 1)
    # matches per-map numpy-style reduction
    expect_u = f.mean(dim=(2, 3), keepdim=True)
    assert torch.allclose(u, expect_u)
    expect_sigma = f.var(dim=(2, 3), keepdim=True, unbiased=False).sqrt()
    assert torch.allclose(sigma, expect_sigma, atol=1e-6)


def test_instance_stats_eps_guards_constant_maps():
    f = torch.full((1, 1, 4, 4), 3.0)
    _, sigma = instance_stats(f, eps=1e-5)
    assert sigma.item() == pytest.approx(math.sqrt(1e-5), rel=1e-6)


def test_resample_to_nearest_and_noop():
    x = torch.arange(4.0).reshape(1, 1, 2, 2)
    up = resample_to(x, 4, 4)
    assert up.shape == (1, 1, 4, 4)
    assert up[0, 0, 0, 0] == up[0, 0, 1, 1] == 0.0  # nearest copies
    assert resample_to(x, 2, 2) is x


def test_seeded_init_repeatable_and_distinguishing():
    def build():
        return nn.Sequential(nn.Conv2d(3, 8, 3), nn.InstanceNorm2d(8, affine=True), nn.Conv2d(8, 1, 1))

    a, b, c = build(), build(), build()
    seeded_init_(a, 7)
    seeded_init_(b, 7)
    seeded_init_(c, 8)
    for (_, pa), (_, pb) in zip(a.named_parameters(), b.named_parameters()):
        assert torch.equal(pa, pb)
    assert any(
        not torch.equal(pa, pc) for (_, pa), (_, pc) in zip(a.named_parameters(), c.named_parameters())
    )


def test_seeded_init_value_conventions():
    module = nn.Sequential(nn.Conv2d(3, 64, 3), nn.InstanceNorm2d(64, affine=True))
    seeded_init_(module, 0)
    conv, norm = module[0], module[1]
    assert torch.all(norm.weight == 1.0)  # 1-D .weight tensors start at one
    assert torch.all(norm.bias == 0.0)
    assert torch.all(conv.bias == 0.0)
    assert conv.weight.std().item() == pytest.approx(0.02, rel=0.15)
    assert conv.weight.mean().item() == pytest.approx(0.0, abs=0.005)


def test_seeded_init_runs_special_hooks():
    class WithHook(nn.Module):
        def __init__(self):
            super().__init__()
            self.marker = nn.Parameter(torch.zeros(4))

        def reset_special_parameters(self):
            with torch.no_grad():
                self.marker.fill_(5.0)

    m = WithHook()
    seeded_init_(m, 0)
    assert torch.all(m.marker == 5.0)


def test_finish_build_attaches_build_metadata():
    m = nn.Conv2d(1, 1, 1)
    out = finish_build(m, {"k": 1}, seed=42)
    assert out is m
    assert m.build_seed == 42
    assert isinstance(m.config_fingerprint, str) and len(m.config_fingerprint) == 64
