"""Checkpoint archives carrying parameters, optimizer state and RNG state.

Every archive stores per-model config fingerprints and the training stream
state, so a resumed run can verify it is continuing the same experiment and
then reproduce the original step sequence exactly.
"""

from __future__ import annotations

from pathlib import Path

import torch

from .config import Config, config_to_dict, fingerprint


class CheckpointMismatchError(RuntimeError):
    """Checkpoint does not belong to the models or config it is loaded into."""


def save_checkpoint(
    path: Path | str,
    *,
    models: dict[str, torch.nn.Module],
    optimizers: dict[str, torch.optim.Optimizer],
    config: Config,
    epoch: int,
    step: int,
    stream_state: torch.Tensor,
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "epoch": int(epoch),
        "step": int(step),
        "seed": int(config.training.seed),
        "phase": config.training.phase,
        "config": config_to_dict(config),
        "config_fingerprint": fingerprint(config),
        "models": {name: model.state_dict() for name, model in models.items()},
        "model_meta": {
            name: {
                "build_seed": getattr(model, "build_seed", None),
                "config_fingerprint": getattr(model, "config_fingerprint", None),
            }
            for name, model in models.items()
        },
        "optimizers": {name: opt.state_dict() for name, opt in optimizers.items()},
        "stream_state": stream_state,
    }
    torch.save(payload, path)
    return path


def load_checkpoint(
    path: Path | str,
    *,
    models: dict[str, torch.nn.Module],
    optimizers: dict[str, torch.optim.Optimizer] | None = None,
    config: Config | None = None,
) -> dict:
    """Restore state into ``models`` (and ``optimizers``) and return the payload.

    Only the requested model names are restored, so inference can pull a
    generator out of a training checkpoint. Fingerprint mismatches raise
    instead of silently loading incompatible parameters.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"checkpoint file not found: {path}")
    payload = torch.load(path, map_location="cpu", weights_only=True)
    if config is not None and payload["config_fingerprint"] != fingerprint(config):
        raise CheckpointMismatchError(
            f"checkpoint {path} was written under a different config "
            f"(fingerprint {payload['config_fingerprint'][:12]}... vs {fingerprint(config)[:12]}...)"
        )
    for name, model in models.items():
        if name not in payload["models"]:
            raise CheckpointMismatchError(f"checkpoint {path} has no model named {name!r}")
        meta = payload["model_meta"].get(name, {})
        own = getattr(model, "config_fingerprint", None)
        if own is not None and meta.get("config_fingerprint") not in (None, own):
            raise CheckpointMismatchError(
                f"model {name!r} was built from a different config than the checkpoint"
            )
        model.load_state_dict(payload["models"][name])
    if optimizers is not None:
        for name, opt in optimizers.items():
            if name not in payload["optimizers"]:
                raise CheckpointMismatchError(f"checkpoint {path} has no optimizer named {name!r}")
            opt.load_state_dict(payload["optimizers"][name])
    return payload
