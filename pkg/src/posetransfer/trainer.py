"""Two-phase GAN training with checkpointed randomness for exact resume."""

from __future__ import annotations

import csv
import dataclasses
from pathlib import Path

import torch

from .checkpoint import load_checkpoint, save_checkpoint
from .config import NUM_JOINTS, Config, ConfigError, DiscriminatorConfig, TrainConfig
from .data.dataset import PairBatch, PairDataset, batch_iterator
from .features import load_feature_extractor
from .figures import save_loss_curves
from .losses import (
    adv_loss_discriminator,
    adv_loss_generator,
    contextual_loss,
    full_loss,
    l1_loss,
    perceptual_loss,
)
from .manifest import write_run_manifest
from .models import build_discriminator, build_edge_generator, build_image_generator

MAX_SEED = 2**31 - 1
LOG_COLUMNS = ("step", "epoch", "lr", "discriminator", "adversarial", "l1", "perceptual", "contextual", "total")


def lr_at_epoch(epoch: int, config: TrainConfig) -> float:
    """Piecewise-linear schedule: flat, then linear decay to zero at the end."""
    if not 0 <= epoch <= config.epochs:
        raise ValueError(f"epoch {epoch} outside [0, {config.epochs}]")
    if epoch < config.decay_start_epoch:
        return config.lr
    return config.lr * (config.epochs - epoch) / (config.epochs - config.decay_start_epoch)


class Trainer:
    """Per-phase model set plus alternating critic/generator updates.

    A single seeded torch.Generator drives every random decision (epoch
    shuffles and per-step noise seeds). Its state goes into each checkpoint,
    so a resumed run replays the exact continuation of the original one.
    """

    def __init__(
        self,
        config: Config,
        dataset: PairDataset | None = None,
        frozen_edge_generator=None,
        semantic_provider=None,
    ):
        config.validate()
        self.config = config
        self.dataset = dataset
        self.train_cfg = config.training
        self.phase = config.training.phase
        seed = config.training.seed
        ig_cfg = config.image_generator

        if self.phase == "pct":
            self.generator = build_edge_generator(config.edge_generator, seed)
            image_channels = config.edge_generator.output_channels
            style_channels = config.edge_generator.output_channels
            pose_channels = NUM_JOINTS
        else:
            self.generator = build_image_generator(ig_cfg, seed)
            image_channels = ig_cfg.image_channels
            style_channels = ig_cfg.image_channels
            pose_channels = ig_cfg.pose_channels
        d_base = self.train_cfg.disc_base_channels
        self.style_disc = build_discriminator(
            DiscriminatorConfig(condition_channels=style_channels, image_channels=image_channels, base_channels=d_base),
            seed + 1,
        )
        self.pose_disc = build_discriminator(
            DiscriminatorConfig(condition_channels=pose_channels, image_channels=image_channels, base_channels=d_base),
            seed + 2,
        )
        self.extractor = load_feature_extractor(
            self.train_cfg.extractor, self.train_cfg.extractor_weights, seed=seed
        )
        betas = (self.train_cfg.adam_beta1, self.train_cfg.adam_beta2)
        self.gen_opt = torch.optim.Adam(self.generator.parameters(), lr=self.train_cfg.lr, betas=betas)
        self.disc_opt = torch.optim.Adam(
            list(self.style_disc.parameters()) + list(self.pose_disc.parameters()),
            lr=self.train_cfg.lr,
            betas=betas,
        )

        if self.phase == "is" and ig_cfg.content_source == "prior-edge":
            if frozen_edge_generator is None:
                raise ConfigError("phase 'is' with prior-edge content needs a trained phase-1 generator")
            frozen_edge_generator.requires_grad_(False)
            frozen_edge_generator.eval()
        self.frozen_edge_generator = frozen_edge_generator
        if self.phase == "is" and ig_cfg.content_source == "semantic" and semantic_provider is None:
            raise ConfigError("semantic content maps are an external input; pass semantic_provider")
        self.semantic_provider = semantic_provider

        self.stream = torch.Generator().manual_seed(seed)
        self.epoch = 0
        self.step = 0

    def _content(self, batch: PairBatch) -> torch.Tensor | None:
        source = self.config.image_generator.content_source
        if source == "prior-edge":
            with torch.no_grad():
                return self.frozen_edge_generator(batch.source_edge, batch.source_pose, batch.target_pose)
        if source == "source-edge":
            return batch.source_edge
        if source == "none":
            return None
        return self.semantic_provider(batch)

    def train_step(self, batch: PairBatch) -> dict:
        """One discriminator update followed by one generator update."""
        if self.phase == "pct":
            real = batch.target_edge
            style_cond = batch.source_edge
            pose_cond = batch.target_pose
            fake = self.generator(batch.source_edge, batch.source_pose, batch.target_pose)
        else:
            real = batch.target_image
            style_cond = batch.source_image
            pose_cond = batch.target_pose
            content = self._content(batch)
            z0_seed = int(torch.randint(0, MAX_SEED, (1,), generator=self.stream))
            fake = self.generator(batch.source_image, content, batch.target_pose, z0_seed)

        d_loss = adv_loss_discriminator(self.style_disc, self.pose_disc, style_cond, pose_cond, real, fake)
        self.disc_opt.zero_grad()
        d_loss.backward()
        self.disc_opt.step()

        terms = {
            "adversarial": adv_loss_generator(self.style_disc, self.pose_disc, style_cond, pose_cond, fake),
            "l1": l1_loss(fake, real),
            "perceptual": perceptual_loss(fake, real, self.extractor),
            "contextual": contextual_loss(fake, real, self.extractor),
        }
        try:
            total, breakdown = full_loss(terms, self.train_cfg.weights)
        except FloatingPointError as exc:
            raise FloatingPointError(f"aborting at step {self.step} (epoch {self.epoch}): {exc}") from exc
        self.gen_opt.zero_grad()
        total.backward()
        self.gen_opt.step()

        record = {
            "step": self.step,
            "epoch": self.epoch,
            "lr": self.gen_opt.param_groups[0]["lr"],
            "phase": self.phase,
            "discriminator": float(d_loss.detach()),
        }
        record.update(breakdown)
        if self.phase == "is":
            record["content_source"] = self.config.image_generator.content_source
        self.step += 1
        return record

    def set_lr(self, lr: float):
        for group in self.gen_opt.param_groups + self.disc_opt.param_groups:
            group["lr"] = lr

    def run_epoch(self) -> list[dict]:
        if self.dataset is None:
            raise RuntimeError("trainer was constructed without a dataset")
        self.set_lr(lr_at_epoch(self.epoch, self.train_cfg))
        epoch_seed = int(torch.randint(0, MAX_SEED, (1,), generator=self.stream))
        records = []
        for batch in batch_iterator(self.dataset, self.train_cfg.batch_size, self.train_cfg.shuffle, epoch_seed):
            records.append(self.train_step(batch))
        self.epoch += 1
        return records

    def model_dict(self) -> dict[str, torch.nn.Module]:
        return {"generator": self.generator, "style_disc": self.style_disc, "pose_disc": self.pose_disc}

    def optimizer_dict(self) -> dict[str, torch.optim.Optimizer]:
        return {"generator": self.gen_opt, "discriminators": self.disc_opt}

    def save(self, path: Path | str) -> Path:
        return save_checkpoint(
            path,
            models=self.model_dict(),
            optimizers=self.optimizer_dict(),
            config=self.config,
            epoch=self.epoch,
            step=self.step,
            stream_state=self.stream.get_state(),
        )

    def restore(self, path: Path | str) -> dict:
        payload = load_checkpoint(path, models=self.model_dict(), optimizers=self.optimizer_dict(), config=self.config)
        self.epoch = int(payload["epoch"])
        self.step = int(payload["step"])
        self.stream.set_state(payload["stream_state"])
        return payload


@dataclasses.dataclass
class TrainResult:
    records: list[dict]
    out_dir: Path
    log_path: Path
    manifest_path: Path
    checkpoint_paths: list[Path]
    figure_path: Path | None

    @property
    def final_checkpoint(self) -> Path | None:
        return self.checkpoint_paths[-1] if self.checkpoint_paths else None


def run_training(
    config: Config,
    dataset: PairDataset,
    out_dir: Path | str,
    frozen_edge_generator=None,
    semantic_provider=None,
    resume: Path | str | None = None,
) -> TrainResult:
    """Drive epochs to completion with CSV logging and epoch checkpoints."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    trainer = Trainer(
        config,
        dataset,
        frozen_edge_generator=frozen_edge_generator,
        semantic_provider=semantic_provider,
    )
    if resume is not None:
        trainer.restore(resume)
    manifest_path = write_run_manifest(
        out_dir, config, command="train", extra={"resumed_from": str(resume) if resume else None}
    )
    log_path = out_dir / "training_log.csv"
    records: list[dict] = []
    checkpoints: list[Path] = []
    with open(log_path, "a" if resume else "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=LOG_COLUMNS, extrasaction="ignore")
        if fh.tell() == 0:
            writer.writeheader()
        while trainer.epoch < config.training.epochs:
            epoch_records = trainer.run_epoch()
            for record in epoch_records:
                writer.writerow(record)
            fh.flush()
            records.extend(epoch_records)
            at_cadence = trainer.epoch % config.training.checkpoint_every == 0
            if at_cadence or trainer.epoch == config.training.epochs:
                checkpoints.append(trainer.save(out_dir / "checkpoints" / f"epoch_{trainer.epoch:04d}.pt"))
    figure_path = save_loss_curves(records, out_dir / "loss_curves.png") if records else None
    return TrainResult(
        records=records,
        out_dir=out_dir,
        log_path=log_path,
        manifest_path=manifest_path,
        checkpoint_paths=checkpoints,
        figure_path=figure_path,
    )
