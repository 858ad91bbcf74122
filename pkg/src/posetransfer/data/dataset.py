"""Lazy pair dataset: images, pose heatmaps and edge maps, plus seeded batching."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np
import torch
from PIL import Image

from ..config import DataConfig
from .edges import rgb_to_luminance, xdog_edge
from .heatmap import rasterize_pose_heatmap
from .keypoints import Keypoints, load_keypoints

logger = logging.getLogger(__name__)


class DatasetError(RuntimeError):
    """Unusable pair manifest, or an unusable row under strict mode."""


def normalize_image(pixels: np.ndarray) -> np.ndarray:
    """uint8 HxWx3 -> float32 3xHxW in [-1, 1]."""
    if pixels.ndim != 3 or pixels.shape[2] != 3:
        raise ValueError(f"expected HxWx3 pixel array, got shape {pixels.shape}")
    chw = pixels.astype(np.float32).transpose(2, 0, 1)
    return chw / 127.5 - 1.0


def denormalize_image(image: np.ndarray) -> np.ndarray:
    """float32 3xHxW in [-1, 1] -> uint8 HxWx3, inverse of normalize_image."""
    if image.ndim != 3 or image.shape[0] != 3:
        raise ValueError(f"expected 3xHxW image, got shape {image.shape}")
    pixels = (np.clip(image, -1.0, 1.0) + 1.0) * 127.5
    return np.rint(pixels).astype(np.uint8).transpose(1, 2, 0)


def load_image(path: Path | str, height: int, width: int) -> np.ndarray:
    """Load an RGB image file, resize to height x width, map to [-1, 1] CHW."""
    with Image.open(path) as handle:
        rgb = handle.convert("RGB")
        if rgb.size != (width, height):
            rgb = rgb.resize((width, height), Image.BILINEAR)
        pixels = np.asarray(rgb, dtype=np.uint8)
    return normalize_image(pixels)


@dataclass(frozen=True)
class PairDescriptor:
    source_name: str
    target_name: str

    @property
    def pair_id(self) -> str:
        return f"{self.source_name}->{self.target_name}"


@dataclass
class PairIndex:
    """Validated pair list; resolves rows to files lazily via PairDataset."""

    image_dir: Path
    descriptors: list[PairDescriptor]
    keypoints: dict[str, Keypoints]
    skipped: list[tuple[int, str, str]]


def load_pair_index(
    pairs_file: Path | str,
    image_dir: Path | str,
    keypoints_file: Path | str,
    strict: bool = False,
) -> PairIndex:
    """Read a `from,to` CSV manifest and keep rows whose files and keypoints exist.

    Rows that reference a missing image or keypoint record are skipped and
    recorded as (line, pair, reason); under strict mode they raise instead.
    Descriptor order always equals manifest order.
    """
    image_dir = Path(image_dir)
    keypoints, rejected = load_keypoints(keypoints_file)
    if rejected and strict:
        line, name, reason = rejected[0]
        raise DatasetError(f"{keypoints_file}:{line}: bad keypoint record for {name!r}: {reason}")

    descriptors: list[PairDescriptor] = []
    skipped: list[tuple[int, str, str]] = []
    with open(pairs_file, newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["from", "to"]:
            raise DatasetError(f"{pairs_file}: expected header 'from,to', got {reader.fieldnames}")
        for row in reader:
            line = reader.line_num
            source, target = (row["from"] or "").strip(), (row["to"] or "").strip()
            pair_label = f"{source}->{target}"
            reason = None
            if not source or not target:
                reason = "empty image name"
            else:
                for name in (source, target):
                    if not (image_dir / name).is_file():
                        reason = f"missing image file {name!r}"
                        break
                    if name not in keypoints:
                        reason = f"no keypoint record for {name!r}"
                        break
            if reason is None:
                descriptors.append(PairDescriptor(source, target))
            elif strict:
                raise DatasetError(f"{pairs_file}:{line}: {reason}")
            else:
                skipped.append((line, pair_label, reason))
                logger.warning("skipping pair at %s:%d (%s): %s", pairs_file, line, pair_label, reason)
    return PairIndex(image_dir=image_dir, descriptors=descriptors, keypoints=keypoints, skipped=skipped)


@dataclass
class TrainingPair:
    """One source/target example; all tensors share the configured H x W."""

    source_name: str
    target_name: str
    source_image: torch.Tensor  # (3, H, W) in [-1, 1]
    target_image: torch.Tensor  # (3, H, W) in [-1, 1]
    source_pose: torch.Tensor  # (18, H, W) in [0, 1]
    target_pose: torch.Tensor  # (18, H, W) in [0, 1]
    source_edge: torch.Tensor  # (1, H, W) in [0, 1]
    target_edge: torch.Tensor  # (1, H, W) in [0, 1], phase-1 supervision


@dataclass
class PairBatch:
    source_names: list[str]
    target_names: list[str]
    source_image: torch.Tensor  # (B, 3, H, W)
    target_image: torch.Tensor
    source_pose: torch.Tensor  # (B, 18, H, W)
    target_pose: torch.Tensor
    source_edge: torch.Tensor  # (B, 1, H, W)
    target_edge: torch.Tensor

    def __len__(self) -> int:
        return len(self.source_names)


def collate_pairs(pairs: list[TrainingPair]) -> PairBatch:
    if not pairs:
        raise ValueError("cannot collate an empty list of pairs")
    return PairBatch(
        source_names=[p.source_name for p in pairs],
        target_names=[p.target_name for p in pairs],
        source_image=torch.stack([p.source_image for p in pairs]),
        target_image=torch.stack([p.target_image for p in pairs]),
        source_pose=torch.stack([p.source_pose for p in pairs]),
        target_pose=torch.stack([p.target_pose for p in pairs]),
        source_edge=torch.stack([p.source_edge for p in pairs]),
        target_edge=torch.stack([p.target_edge for p in pairs]),
    )


class PairDataset:
    """Materializes TrainingPair items from a PairIndex on demand.

    Edge extraction is the slow part (two Gaussian blurs per image), so edge
    maps can be cached on disk under a directory keyed by the edge-parameter
    fingerprint; stale caches from other parameter sets never collide.
    """

    def __init__(self, index: PairIndex, config: DataConfig, cache_dir: Path | str | None = None):
        self.index = index
        self.config = config
        self.sigma = config.resolved_heatmap_sigma()
        if cache_dir is None:
            self.cache_dir = None
        else:
            self.cache_dir = Path(cache_dir) / f"edges-{config.xdog.cache_key()}"

    def __len__(self) -> int:
        return len(self.index.descriptors)

    def __getitem__(self, i: int) -> TrainingPair:
        desc = self.index.descriptors[i]
        src_image, src_pose, src_edge = self._load_side(desc.source_name)
        dst_image, dst_pose, dst_edge = self._load_side(desc.target_name)
        return TrainingPair(
            source_name=desc.source_name,
            target_name=desc.target_name,
            source_image=src_image,
            target_image=dst_image,
            source_pose=src_pose,
            target_pose=dst_pose,
            source_edge=src_edge,
            target_edge=dst_edge,
        )

    def _load_side(self, name: str) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        cfg = self.config
        image = load_image(self.index.image_dir / name, cfg.image_height, cfg.image_width)
        pose = rasterize_pose_heatmap(self.index.keypoints[name], cfg.image_height, cfg.image_width, self.sigma)
        edge = self._edge(name, image)
        return torch.from_numpy(image), torch.from_numpy(pose), torch.from_numpy(edge)

    def _edge(self, name: str, image: np.ndarray) -> np.ndarray:
        if self.cache_dir is None:
            return xdog_edge(rgb_to_luminance(image), self.config.xdog)
        path = self.cache_dir / (name + ".npy")
        if path.is_file():
            return np.load(path)
        edge = xdog_edge(rgb_to_luminance(image), self.config.xdog)
        path.parent.mkdir(parents=True, exist_ok=True)
        np.save(path, edge)
        return edge


def batch_iterator(
    dataset: PairDataset,
    batch_size: int,
    shuffle: bool,
    seed: int = 0,
) -> Iterator[PairBatch]:
    """Yield batches covering the dataset once; the final short batch is kept.

    With shuffle on, the epoch permutation comes from a torch.Generator seeded
    with `seed`, so a (dataset, seed) pair always replays the same order.
    """
    n = len(dataset)
    if n == 0:
        raise DatasetError("dataset is empty, nothing to iterate")
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    if shuffle:
        gen = torch.Generator().manual_seed(int(seed))
        order = torch.randperm(n, generator=gen).tolist()
    else:
        order = list(range(n))
    for start in range(0, n, batch_size):
        yield collate_pairs([dataset[i] for i in order[start : start + batch_size]])
