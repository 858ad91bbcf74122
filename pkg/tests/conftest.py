"""Shared fixtures: a tiny synthetic corpus and desk-scale configs."""

from __future__ import annotations

import dataclasses

import numpy as np
import pytest
import torch
from PIL import Image

from posetransfer.config import (
    Config,
    DataConfig,
    DiscriminatorConfig,
    EdgeGeneratorConfig,
    ImageGeneratorConfig,
    LossWeights,
    PathsConfig,
    TrainConfig,
    save_config,
)
from posetransfer.data import Keypoints, rasterize_pose_heatmap, rgb_to_luminance, save_keypoints, xdog_edge
from posetransfer.data.dataset import TrainingPair, collate_pairs

torch.set_num_threads(1)

HEIGHT, WIDTH = 64, 48
IMAGE_NAMES = ("a.png", "b.png", "c.png", "d.png")
PAIRS = (("a.png", "b.png"), ("c.png", "d.png"), ("b.png", "a.png"))


def blocky_image(seed: int, height: int = HEIGHT, width: int = WIDTH, blocks: int = 12) -> np.ndarray:
    """Piecewise-constant figure on a plain background; XDoG finds its outlines."""
    rng = np.random.default_rng(seed)
    img = np.full((height, width, 3), 220, dtype=np.uint8)
    for _ in range(blocks):
        y0 = int(rng.integers(0, height - 8))
        x0 = int(rng.integers(0, width - 6))
        h = int(rng.integers(5, 14))
        w = int(rng.integers(4, 12))
        color = rng.integers(20, 200, size=3)
        img[y0 : y0 + min(h, height - y0), x0 : x0 + min(w, width - x0)] = color
    return img


def random_joints(seed: int, height: int = HEIGHT, width: int = WIDTH) -> Keypoints:
    rng = np.random.default_rng(seed)
    return Keypoints(
        x=rng.uniform(4, width - 4, size=18),
        y=rng.uniform(4, height - 4, size=18),
        visible=np.ones(18, dtype=bool),
    )


def desk_config(
    phase: str = "pct",
    height: int = HEIGHT,
    width: int = WIDTH,
    lr: float = 1e-4,
    seed: int = 0,
    weights: LossWeights | None = None,
    **train_kwargs,
) -> Config:
    return Config(
        data=DataConfig(image_height=height, image_width=width),
        edge_generator=EdgeGeneratorConfig(base_channels=16, num_residual_blocks=2),
        image_generator=ImageGeneratorConfig(
            num_levels=4, base_channels=16, max_channels=128, spade_hidden_channels=16
        ),
        training=TrainConfig(
            phase=phase,
            epochs=train_kwargs.pop("epochs", 2),
            decay_start_epoch=train_kwargs.pop("decay_start_epoch", 1),
            lr=lr,
            seed=seed,
            disc_base_channels=16,
            weights=weights or LossWeights(),
            **train_kwargs,
        ),
    )


def make_pair(seed_src: int = 1, seed_dst: int = 2, config: Config | None = None) -> TrainingPair:
    cfg = config or desk_config()
    h, w = cfg.data.image_height, cfg.data.image_width
    sigma = cfg.data.resolved_heatmap_sigma()

    def side(seed):
        img8 = blocky_image(seed, h, w)
        img = torch.from_numpy(img8.astype(np.float32).transpose(2, 0, 1) / 127.5 - 1.0)
        edge = torch.from_numpy(xdog_edge(rgb_to_luminance(img.numpy()), cfg.data.xdog))
        pose = torch.from_numpy(rasterize_pose_heatmap(random_joints(seed, h, w), h, w, sigma))
        return img, edge, pose

    img_s, edge_s, pose_s = side(seed_src)
    img_t, edge_t, pose_t = side(seed_dst)
    return TrainingPair(
        source_name=f"s{seed_src}.png",
        target_name=f"s{seed_dst}.png",
        source_image=img_s,
        target_image=img_t,
        source_pose=pose_s,
        target_pose=pose_t,
        source_edge=edge_s,
        target_edge=edge_t,
    )


@pytest.fixture(scope="session")
def tiny_pair() -> TrainingPair:
    return make_pair()


@pytest.fixture(scope="session")
def tiny_batch(tiny_pair):
    return collate_pairs([tiny_pair])


def build_corpus(root):
    """Full on-disk corpus: images, keypoints CSV, pairs CSV, YAML config."""
    image_dir = root / "images"
    image_dir.mkdir()
    records = {}
    for i, name in enumerate(IMAGE_NAMES):
        Image.fromarray(blocky_image(seed=10 + i)).save(image_dir / name)
        records[name] = random_joints(seed=10 + i)
    keypoints_file = root / "keypoints.csv"
    save_keypoints(records, keypoints_file)

    pairs_file = root / "pairs.csv"
    pairs_file.write_text("from,to\n" + "\n".join(f"{a},{b}" for a, b in PAIRS) + "\n")

    cfg = desk_config(epochs=1, decay_start_epoch=0, batch_size=2)
    cfg = dataclasses.replace(
        cfg,
        paths=PathsConfig(
            image_dir=str(image_dir),
            pairs_file=str(pairs_file),
            keypoints_file=str(keypoints_file),
            cache_dir=str(root / "cache"),
            out_dir=str(root / "runs"),
        ),
    )
    config_file = root / "config.yaml"
    save_config(cfg, config_file)
    return {
        "root": root,
        "image_dir": image_dir,
        "keypoints_file": keypoints_file,
        "pairs_file": pairs_file,
        "config_file": config_file,
        "config": cfg,
    }


@pytest.fixture()
def corpus(tmp_path):
    return build_corpus(tmp_path)
