"""Run manifests: a JSON snapshot sufficient to reproduce a command."""

from __future__ import annotations

import hashlib
import json
from datetime import datetime, timezone
from pathlib import Path

from .config import Config, config_to_dict, fingerprint

MANIFEST_NAME = "run_manifest.json"


def code_hash() -> str:
    """Content hash over the package's source files, like a git tree hash."""
    root = Path(__file__).parent
    digest = hashlib.sha1()
    for path in sorted(root.rglob("*.py")):
        digest.update(str(path.relative_to(root)).encode())
        digest.update(b"\0")
        digest.update(path.read_bytes())
    return digest.hexdigest()


def write_run_manifest(
    out_dir: Path | str,
    config: Config,
    command: str,
    extra: dict | None = None,
) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = {
        "command": command,
        "written_at": datetime.now(timezone.utc).isoformat(),
        "seed": config.training.seed,
        "phase": config.training.phase,
        "ablation": config.ablation,
        "content_source": config.image_generator.content_source,
        "encoder_norm": config.image_generator.encoder_norm,
        "decoder_block": config.image_generator.decoder_block,
        "config_fingerprint": fingerprint(config),
        "code_hash": code_hash(),
        "config": config_to_dict(config),
    }
    if extra:
        payload.update(extra)
    path = out_dir / MANIFEST_NAME
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def read_run_manifest(out_dir: Path | str) -> dict:
    with open(Path(out_dir) / MANIFEST_NAME) as fh:
        return json.load(fh)
