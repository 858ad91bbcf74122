"""Command line interface: prepare, train, infer and eval subcommands."""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from .checkpoint import load_checkpoint
from .config import ABLATIONS, Config, apply_ablation, load_config
from .data.dataset import PairDataset, PairDescriptor, denormalize_image, load_image, load_pair_index
from .data.edges import rgb_to_luminance, xdog_edge
from .data.heatmap import rasterize_pose_heatmap
from .features import load_feature_extractor
from .figures import save_metric_histograms
from .manifest import write_run_manifest
from .metrics import evaluate
from .models import build_edge_generator, build_image_generator
from .trainer import run_training


def _effective_config(args) -> Config:
    config = load_config(args.config)
    if getattr(args, "phase", None):
        config.training.phase = args.phase
    if getattr(args, "seed", None) is not None:
        config.training.seed = args.seed
    if getattr(args, "ablation", None):
        config = apply_ablation(config, args.ablation)
    config.validate()
    return config


def _dataset(config: Config) -> PairDataset:
    index = load_pair_index(
        config.paths.pairs_file,
        config.paths.image_dir,
        config.paths.keypoints_file,
        strict=config.data.strict,
    )
    return PairDataset(index, config.data, cache_dir=config.paths.cache_dir)


def _pair_stem(desc: PairDescriptor) -> str:
    return f"{Path(desc.source_name).stem}__{Path(desc.target_name).stem}"


def _save_image_png(image: np.ndarray | torch.Tensor, path: Path):
    if isinstance(image, torch.Tensor):
        image = image.numpy()
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(denormalize_image(image)).save(path)


def _save_edge_png(edge: np.ndarray | torch.Tensor, path: Path):
    if isinstance(edge, torch.Tensor):
        edge = edge.numpy()
    path.parent.mkdir(parents=True, exist_ok=True)
    gray = np.rint(np.clip(edge[0], 0.0, 1.0) * 255.0).astype(np.uint8)
    Image.fromarray(gray, mode="L").save(path)


def _load_edge_generator(path: str | None, config: Config):
    if not path or not Path(path).is_file():
        raise SystemExit(f"phase 'pct' checkpoint missing: {path!r}")
    model = build_edge_generator(config.edge_generator, seed=0)
    load_checkpoint(path, models={"generator": model})
    model.requires_grad_(False)
    model.eval()
    return model


def _load_image_generator(path: str | None, config: Config):
    if not path or not Path(path).is_file():
        raise SystemExit(f"phase 'is' checkpoint missing: {path!r}")
    model = build_image_generator(config.image_generator, seed=0)
    load_checkpoint(path, models={"generator": model})
    model.requires_grad_(False)
    model.eval()
    return model


def cmd_prepare(args) -> int:
    """Cache edge maps and pose heatmaps for every image referenced by a pair."""
    config = _effective_config(args)
    out_dir = Path(args.out) if args.out else Path(config.paths.cache_dir)
    index = load_pair_index(
        config.paths.pairs_file,
        config.paths.image_dir,
        config.paths.keypoints_file,
        strict=config.data.strict,
    )
    names = sorted({d.source_name for d in index.descriptors} | {d.target_name for d in index.descriptors})
    edge_dir = out_dir / f"edges-{config.data.xdog.cache_key()}"
    sigma = config.data.resolved_heatmap_sigma()
    heatmap_dir = out_dir / f"heatmaps-sigma{sigma:g}"
    height, width = config.data.image_height, config.data.image_width
    written = up_to_date = 0
    for name in names:
        edge_path = edge_dir / f"{name}.npy"
        heat_path = heatmap_dir / f"{name}.npy"
        if edge_path.is_file():
            up_to_date += 1
        else:
            image = load_image(Path(config.paths.image_dir) / name, height, width)
            edge = xdog_edge(rgb_to_luminance(image), config.data.xdog)
            edge_path.parent.mkdir(parents=True, exist_ok=True)
            np.save(edge_path, edge)
            written += 1
        if heat_path.is_file():
            up_to_date += 1
        else:
            heatmap = rasterize_pose_heatmap(index.keypoints[name], height, width, sigma)
            heat_path.parent.mkdir(parents=True, exist_ok=True)
            np.save(heat_path, heatmap)
            written += 1

    rejects_path = out_dir / "rejects.csv"
    rejects_path.parent.mkdir(parents=True, exist_ok=True)
    with open(rejects_path, "w", newline="") as fh:
        fh.write("kind,line,item,reason\n")
        for line, name, reason in index.skipped:
            fh.write(f"pair,{line},{name},{reason}\n")
    write_run_manifest(
        out_dir,
        config,
        command="prepare",
        extra={"files_written": written, "files_up_to_date": up_to_date, "pairs": len(index.descriptors)},
    )
    print(f"prepared {len(names)} images: {written} files written, {up_to_date} up to date")
    print(f"pairs usable: {len(index.descriptors)}, skipped rows listed in {rejects_path}")
    return 0


def cmd_train(args) -> int:
    config = _effective_config(args)
    out_dir = Path(args.out) if args.out else Path(config.paths.out_dir) / config.training.phase
    dataset = _dataset(config)
    frozen = None
    if config.training.phase == "is" and config.image_generator.content_source == "prior-edge":
        frozen = _load_edge_generator(args.pct_checkpoint, config)
    result = run_training(config, dataset, out_dir, frozen_edge_generator=frozen, resume=args.resume)
    print(f"finished at epoch {config.training.epochs}; log: {result.log_path}")
    if result.final_checkpoint:
        print(f"last checkpoint: {result.final_checkpoint}")
    return 0


def cmd_infer(args) -> int:
    """Run the full two-phase pipeline over the configured pair list."""
    config = _effective_config(args)
    out_dir = Path(args.out) if args.out else Path("inference")
    content_source = config.image_generator.content_source
    if content_source == "semantic":
        raise SystemExit("semantic content maps are an external input; use the library API for inference")
    dataset = _dataset(config)
    image_gen = _load_image_generator(args.is_checkpoint, config)
    edge_gen = _load_edge_generator(args.pct_checkpoint, config) if content_source == "prior-edge" else None

    images_dir = out_dir / "images"
    edges_dir = out_dir / "edges"
    n_edges = 0
    for i in range(len(dataset)):
        pair = dataset[i]
        stem = _pair_stem(dataset.index.descriptors[i])
        content = None
        with torch.no_grad():
            if content_source == "prior-edge":
                content = edge_gen(pair.source_edge[None], pair.source_pose[None], pair.target_pose[None])
            elif content_source == "source-edge":
                content = pair.source_edge[None]
            generated = image_gen(
                pair.source_image[None], content, pair.target_pose[None], z0_seed=config.training.seed + i
            )
        _save_image_png(generated[0], images_dir / f"{stem}.png")
        if content is not None:
            _save_edge_png(content[0], edges_dir / f"{stem}.png")
            n_edges += 1
    write_run_manifest(out_dir, config, command="infer", extra={"pairs": len(dataset), "edge_maps": n_edges})
    print(f"wrote {len(dataset)} images to {images_dir}" + (f" and {n_edges} edge maps to {edges_dir}" if n_edges else ""))
    return 0


def cmd_eval(args) -> int:
    config = _effective_config(args)
    generated_dir = Path(args.generated)
    out_dir = Path(args.out) if args.out else Path("eval")
    metric_list = tuple(m.strip() for m in args.metrics.split(",") if m.strip())
    dataset = _dataset(config)
    height, width = config.data.image_height, config.data.image_width

    extractor = None
    if "fid" in metric_list:
        try:
            extractor = load_feature_extractor(
                config.training.extractor, config.training.extractor_weights, seed=config.training.seed
            )
        except (FileNotFoundError, ValueError):
            extractor = None

    missing = []

    def pairs():
        for desc in dataset.index.descriptors:
            path = generated_dir / f"{_pair_stem(desc)}.png"
            if not path.is_file():
                missing.append(desc.pair_id)
                continue
            generated = torch.from_numpy(load_image(path, height, width))
            target = torch.from_numpy(load_image(Path(config.paths.image_dir) / desc.target_name, height, width))
            yield desc.pair_id, generated, target

    report = evaluate(pairs(), metrics=metric_list, feature_extractor=extractor)
    csv_path = report.write_csv(out_dir / "report.csv")
    histogram_path = save_metric_histograms(
        {m: [row[m] for row in report.rows if m in row] for m in report.metric_columns()},
        out_dir / "metric_histograms.png",
    )
    write_run_manifest(
        out_dir,
        config,
        command="eval",
        extra={"generated_dir": str(generated_dir), "pairs_scored": len(report.rows), "pairs_missing": len(missing)},
    )
    print(report.table())
    if missing:
        print(f"missing generated images for {len(missing)} pairs")
    print(f"report: {csv_path}")
    print(f"figures: {histogram_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="posetransfer", description="Two-phase pose-transfer pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", required=True, help="YAML config file")
        p.add_argument("--seed", type=int, default=None, help="override training.seed")
        p.add_argument("--ablation", choices=ABLATIONS, default=None, help="apply an ablation switch")
        p.add_argument("--out", default=None, help="output directory")

    p = sub.add_parser("prepare", help="cache edge maps and pose heatmaps")
    add_common(p)

    p = sub.add_parser("train", help="train one phase")
    add_common(p)
    p.add_argument("--phase", choices=("pct", "is"), default=None, help="override training.phase")
    p.add_argument("--resume", default=None, help="checkpoint to resume from")
    p.add_argument("--pct-checkpoint", default=None, help="phase-1 checkpoint (required for phase 'is' with prior-edge content)")

    p = sub.add_parser("infer", help="generate images for the configured pairs")
    add_common(p)
    p.add_argument("--pct-checkpoint", default=None, help="phase-1 checkpoint")
    p.add_argument("--is-checkpoint", default=None, help="phase-2 checkpoint")

    p = sub.add_parser("eval", help="score generated images against targets")
    add_common(p)
    p.add_argument("--generated", required=True, help="directory of generated images (from infer)")
    p.add_argument("--metrics", default="ssim,l1", help="comma list from: ssim,l1,fid,is,lpips")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"prepare": cmd_prepare, "train": cmd_train, "infer": cmd_infer, "eval": cmd_eval}
    return handlers[args.command](args)


if __name__ == "__main__":
    raise SystemExit(main())
