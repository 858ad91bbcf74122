"""Configuration dataclasses, YAML round-trip and content fingerprints.

A run is described by one YAML file with the sections ``data``, ``paths``,
``edge_generator``, ``image_generator``, ``training`` and a top-level
``ablation`` key. Every section maps 1:1 onto a dataclass below; unknown keys
are rejected so typos fail loudly.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml

NUM_JOINTS = 18

ABLATIONS = (
    "none",
    "no-prior-transfer",
    "no-content-branch",
    "semantic-content",
    "spade-resblk",
    "encoder-batch-norm",
    "encoder-instance-norm",
)


class ConfigError(ValueError):
    pass


@dataclass
class XdogParams:
    """Parameters of the two-scale difference-of-Gaussians edge stylization."""

    sigma: float = 0.8
    k: float = 1.6
    p: float = 19.0
    epsilon: float = 0.01
    phi: float = 10.0

    def validate(self):
        if self.sigma <= 0:
            raise ConfigError(f"xdog sigma must be > 0, got {self.sigma}")
        if self.k <= 1:
            raise ConfigError(f"xdog k must be > 1, got {self.k}")
        if self.phi <= 0:
            raise ConfigError(f"xdog phi must be > 0, got {self.phi}")

    def cache_key(self) -> str:
        return fingerprint(self)[:12]


@dataclass
class DataConfig:
    image_height: int = 256
    image_width: int = 176
    # Gaussian bump radius for joint heatmaps; None means 6 px at height 256,
    # scaled proportionally with the configured height.
    heatmap_sigma: float | None = None
    xdog: XdogParams = field(default_factory=XdogParams)
    strict: bool = False

    def resolved_heatmap_sigma(self) -> float:
        if self.heatmap_sigma is not None:
            return float(self.heatmap_sigma)
        return 6.0 * self.image_height / 256.0

    def validate(self):
        if self.image_height <= 0 or self.image_width <= 0:
            raise ConfigError("image dimensions must be positive")
        if self.heatmap_sigma is not None and self.heatmap_sigma <= 0:
            raise ConfigError("heatmap_sigma must be > 0")
        self.xdog.validate()


@dataclass
class PathsConfig:
    image_dir: str = "data/images"
    pairs_file: str = "data/pairs.csv"
    keypoints_file: str = "data/keypoints.csv"
    cache_dir: str = "cache"
    out_dir: str = "runs"


@dataclass
class EdgeGeneratorConfig:
    """Phase-1 generator: edge + two pose heatmaps in, transferred edge out."""

    input_channels: int = 1 + 2 * NUM_JOINTS
    output_channels: int = 1
    base_channels: int = 128
    num_downsamples: int = 2
    num_residual_blocks: int = 8
    max_channels: int = 512

    def channel_schedule(self) -> list[int]:
        """Widths after the stem and after each downsampling conv."""
        widths = [self.base_channels]
        for _ in range(self.num_downsamples):
            widths.append(min(widths[-1] * 2, self.max_channels))
        return widths

    def validate(self):
        if self.base_channels < 1 or self.max_channels < self.base_channels:
            raise ConfigError("need 1 <= base_channels <= max_channels")
        if self.num_downsamples < 1:
            raise ConfigError("num_downsamples must be >= 1")
        if self.num_residual_blocks < 1:
            raise ConfigError("num_residual_blocks must be >= 1")
        if self.input_channels < 1 or self.output_channels < 1:
            raise ConfigError("channel counts must be positive")


CONTENT_SOURCES = ("prior-edge", "source-edge", "none", "semantic")
ENCODER_NORMS = ("none", "batch", "instance")
DECODER_BLOCKS = ("content-style", "spade-resblk")


@dataclass
class ImageGeneratorConfig:
    """Phase-2 generator: style encoder plus coarse-to-fine adaptive decoder."""

    num_levels: int = 6
    image_channels: int = 3
    pose_channels: int = NUM_JOINTS
    base_channels: int = 64
    max_channels: int = 512
    spade_hidden_channels: int = 64
    norm_eps: float = 1e-5
    content_source: str = "prior-edge"
    semantic_channels: int = 8
    encoder_norm: str = "none"
    decoder_block: str = "content-style"

    def content_channels(self) -> int:
        if self.content_source == "semantic":
            return self.semantic_channels
        if self.content_source == "none":
            return 0
        return 1

    def channel_schedule(self) -> list[int]:
        """Encoder widths after each of the num_levels blocks."""
        widths = []
        ch = self.base_channels
        for _ in range(self.num_levels):
            widths.append(min(ch, self.max_channels))
            ch *= 2
        return widths

    def validate(self):
        if self.num_levels < 1:
            raise ConfigError("num_levels must be >= 1")
        if self.content_source not in CONTENT_SOURCES:
            raise ConfigError(f"content_source must be one of {CONTENT_SOURCES}")
        if self.encoder_norm not in ENCODER_NORMS:
            raise ConfigError(f"encoder_norm must be one of {ENCODER_NORMS}")
        if self.decoder_block not in DECODER_BLOCKS:
            raise ConfigError(f"decoder_block must be one of {DECODER_BLOCKS}")
        if self.content_source == "semantic" and self.semantic_channels < 1:
            raise ConfigError("semantic_channels must be >= 1")


@dataclass
class DiscriminatorConfig:
    condition_channels: int = 3
    image_channels: int = 3
    base_channels: int = 64
    num_downsamples: int = 2
    num_residual_blocks: int = 3

    def validate(self):
        if self.condition_channels < 1 or self.image_channels < 1:
            raise ConfigError("discriminator channel counts must be positive")
        if self.num_downsamples < 1:
            raise ConfigError("num_downsamples must be >= 1")


@dataclass
class LossWeights:
    adversarial: float = 5.0
    l1: float = 1.0
    perceptual: float = 1.0
    contextual: float = 0.1

    def validate(self):
        for name, value in dataclasses.asdict(self).items():
            if value < 0:
                raise ConfigError(f"loss weight {name} must be >= 0, got {value}")


@dataclass
class TrainConfig:
    phase: str = "pct"  # pct = edge-transfer phase, is = image-synthesis phase
    epochs: int = 400
    decay_start_epoch: int = 200
    lr: float = 1e-4
    adam_beta1: float = 0.5
    adam_beta2: float = 0.999
    batch_size: int = 1
    seed: int = 0
    shuffle: bool = True
    checkpoint_every: int = 1  # epochs
    disc_base_channels: int = 64
    weights: LossWeights = field(default_factory=LossWeights)
    # Deep-feature extractor for the perceptual/contextual terms. The random
    # pyramid keeps the losses exercised without pretrained weights; vgg19
    # requires a local weights file (see extractor_weights).
    extractor: str = "random-pyramid"
    extractor_weights: str | None = None

    def validate(self):
        if self.phase not in ("pct", "is"):
            raise ConfigError(f"phase must be 'pct' or 'is', got {self.phase!r}")
        if self.lr <= 0:
            raise ConfigError("lr must be > 0")
        if not 0 <= self.decay_start_epoch < self.epochs:
            raise ConfigError("need 0 <= decay_start_epoch < epochs")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.checkpoint_every < 1:
            raise ConfigError("checkpoint_every must be >= 1")
        self.weights.validate()


@dataclass
class Config:
    data: DataConfig = field(default_factory=DataConfig)
    paths: PathsConfig = field(default_factory=PathsConfig)
    edge_generator: EdgeGeneratorConfig = field(default_factory=EdgeGeneratorConfig)
    image_generator: ImageGeneratorConfig = field(default_factory=ImageGeneratorConfig)
    training: TrainConfig = field(default_factory=TrainConfig)
    ablation: str = "none"

    def validate(self):
        self.data.validate()
        self.edge_generator.validate()
        self.image_generator.validate()
        self.training.validate()
        if self.ablation not in ABLATIONS:
            raise ConfigError(f"unknown ablation {self.ablation!r}, expected one of {ABLATIONS}")
        # Spatial-dimension feasibility at the configured resolution. The
        # image generator pads width/height up to a multiple of 2**L itself,
        # so only the coarsest level being non-empty is enforced here.
        d = 2 ** self.edge_generator.num_downsamples
        if self.data.image_height % d or self.data.image_width % d:
            raise ConfigError(
                f"image dims {self.data.image_height}x{self.data.image_width} must be divisible "
                f"by {d} for {self.edge_generator.num_downsamples} edge-generator downsamples"
            )


def apply_ablation(config: Config, name: str) -> Config:
    """Return a copy of ``config`` with the named ablation switch applied."""
    if name not in ABLATIONS:
        raise ConfigError(f"unknown ablation {name!r}, expected one of {ABLATIONS}")
    out = dataclasses.replace(config)
    out.image_generator = dataclasses.replace(config.image_generator)
    out.ablation = name
    ig = out.image_generator
    if name == "no-prior-transfer":
        ig.content_source = "source-edge"
    elif name == "no-content-branch":
        ig.content_source = "none"
    elif name == "semantic-content":
        ig.content_source = "semantic"
    elif name == "spade-resblk":
        ig.decoder_block = "spade-resblk"
    elif name == "encoder-batch-norm":
        ig.encoder_norm = "batch"
    elif name == "encoder-instance-norm":
        ig.encoder_norm = "instance"
    return out


def _from_dict(cls, data, context):
    if not isinstance(data, dict):
        raise ConfigError(f"section {context!r} must be a mapping, got {type(data).__name__}")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(fields)
    if unknown:
        raise ConfigError(f"unknown keys in {context!r}: {sorted(unknown)}")
    kwargs = {}
    for key, value in data.items():
        if key in ("xdog",):
            value = _from_dict(XdogParams, value, f"{context}.{key}")
        elif key in ("weights",):
            value = _from_dict(LossWeights, value, f"{context}.{key}")
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad section {context!r}: {exc}") from exc


_SECTIONS = {
    "data": DataConfig,
    "paths": PathsConfig,
    "edge_generator": EdgeGeneratorConfig,
    "image_generator": ImageGeneratorConfig,
    "training": TrainConfig,
}


def config_from_dict(raw: dict) -> Config:
    raw = dict(raw or {})
    kwargs = {}
    for section, cls in _SECTIONS.items():
        if section in raw:
            kwargs[section] = _from_dict(cls, raw.pop(section), section)
    ablation = raw.pop("ablation", "none")
    if raw:
        raise ConfigError(f"unknown top-level keys: {sorted(raw)}")
    config = Config(ablation=str(ablation), **kwargs)
    config.validate()
    return config


def load_config(path: str | Path) -> Config:
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    return config_from_dict(raw)


def config_to_dict(config: Config) -> dict:
    return dataclasses.asdict(config)


def save_config(config: Config, path: str | Path):
    with open(path, "w") as fh:
        yaml.safe_dump(config_to_dict(config), fh, sort_keys=False)


def fingerprint(obj) -> str:
    """Stable sha256 over a dataclass (or plain dict) in canonical JSON form."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        obj = dataclasses.asdict(obj)
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()
