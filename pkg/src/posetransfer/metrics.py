"""Image quality metrics and the evaluation report."""

from __future__ import annotations

import csv
import dataclasses
import warnings
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F
from scipy import linalg

PAIR_METRICS = ("ssim", "l1", "lpips")
SET_METRICS = ("fid", "is")
SKIPPED_EXTRACTOR = "skipped: extractor missing"


def _as_chw_tensor(image) -> torch.Tensor:
    if isinstance(image, np.ndarray):
        image = torch.from_numpy(image)
    if image.ndim != 3:
        raise ValueError(f"expected a CHW image, got shape {tuple(image.shape)}")
    return image.to(torch.float64)


def ssim(
    a,
    b,
    window_size: int = 11,
    sigma: float = 1.5,
    k1: float = 0.01,
    k2: float = 0.03,
    data_range: float = 1.0,
) -> float:
    """Mean structural similarity over valid Gaussian windows.

    Takes (C, H, W) images on a [0, 1] scale; statistics are computed per
    channel with an 11x11 Gaussian window (sigma 1.5) and only windows fully
    inside the image count, then everything is averaged.
    """
    ta, tb = _as_chw_tensor(a), _as_chw_tensor(b)
    if ta.shape != tb.shape:
        raise ValueError(f"shape mismatch: {tuple(ta.shape)} vs {tuple(tb.shape)}")
    if ta.shape[-2] < window_size or ta.shape[-1] < window_size:
        raise ValueError(f"image dims {tuple(ta.shape[-2:])} smaller than the {window_size}x{window_size} window")
    coords = torch.arange(window_size, dtype=torch.float64) - (window_size - 1) / 2
    g = torch.exp(-(coords**2) / (2 * sigma**2))
    g = g / g.sum()
    window = (g[:, None] * g[None, :])[None, None]
    channels = ta.shape[0]
    weight = window.repeat(channels, 1, 1, 1)

    x, y = ta[None], tb[None]
    mu_x = F.conv2d(x, weight, groups=channels)
    mu_y = F.conv2d(y, weight, groups=channels)
    var_x = (F.conv2d(x * x, weight, groups=channels) - mu_x**2).clamp_min(0.0)
    var_y = (F.conv2d(y * y, weight, groups=channels) - mu_y**2).clamp_min(0.0)
    cov_xy = F.conv2d(x * y, weight, groups=channels) - mu_x * mu_y
    c1 = (k1 * data_range) ** 2
    c2 = (k2 * data_range) ** 2
    ssim_map = ((2 * mu_x * mu_y + c1) * (2 * cov_xy + c2)) / ((mu_x**2 + mu_y**2 + c1) * (var_x + var_y + c2))
    return float(ssim_map.mean())


def fid_from_stats(mu1: np.ndarray, sigma1: np.ndarray, mu2: np.ndarray, sigma2: np.ndarray, eps: float = 1e-6) -> float:
    """Frechet distance between two Gaussians given their sufficient statistics."""
    mu1, mu2 = np.atleast_1d(mu1).astype(np.float64), np.atleast_1d(mu2).astype(np.float64)
    sigma1, sigma2 = np.atleast_2d(sigma1).astype(np.float64), np.atleast_2d(sigma2).astype(np.float64)
    if mu1.shape != mu2.shape or sigma1.shape != sigma2.shape:
        raise ValueError("statistic shapes differ between the two sets")
    diff = mu1 - mu2
    sqrt_cov, _ = linalg.sqrtm(sigma1 @ sigma2, disp=False)
    if not np.isfinite(sqrt_cov).all():
        warnings.warn("covariance square root failed; retrying with eps*I regularization")
        offset = np.eye(sigma1.shape[0]) * eps
        sqrt_cov, _ = linalg.sqrtm((sigma1 + offset) @ (sigma2 + offset), disp=False)
    if np.iscomplexobj(sqrt_cov):
        sqrt_cov = sqrt_cov.real
    return float(diff @ diff + np.trace(sigma1) + np.trace(sigma2) - 2.0 * np.trace(sqrt_cov))


def fid(features_a: np.ndarray, features_b: np.ndarray, eps: float = 1e-6) -> float:
    """Frechet distance between two feature sets of shape (N, D), N >= 2."""
    a = np.asarray(features_a, dtype=np.float64)
    b = np.asarray(features_b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError("feature sets must be 2-D (samples x dims)")
    if a.shape[0] < 2 or b.shape[0] < 2:
        raise ValueError("need at least 2 feature vectors per set")
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"feature dims differ: {a.shape[1]} vs {b.shape[1]}")
    mu_a, mu_b = a.mean(axis=0), b.mean(axis=0)
    cov_a = np.atleast_2d(np.cov(a, rowvar=False))
    cov_b = np.atleast_2d(np.cov(b, rowvar=False))
    return fid_from_stats(mu_a, cov_a, mu_b, cov_b, eps=eps)


def inception_score(probs: np.ndarray, eps: float = 1e-12) -> float:
    """exp of the mean KL divergence between row distributions and their marginal."""
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 2 or p.shape[0] < 1:
        raise ValueError("probs must be (N, classes) with N >= 1")
    p = np.clip(p, eps, None)
    p = p / p.sum(axis=1, keepdims=True)
    marginal = p.mean(axis=0)
    kl = (p * (np.log(p) - np.log(marginal))).sum(axis=1)
    return float(np.exp(kl.mean()))


def pooled_features(extractor, image: torch.Tensor) -> np.ndarray:
    """Spatially averaged deep features of one [-1, 1] CHW image."""
    with torch.no_grad():
        feats = extractor(image[None].to(torch.float32))["relu4_2"]
    return feats.mean(dim=(2, 3)).squeeze(0).numpy()


@dataclasses.dataclass
class EvalReport:
    rows: list[dict]
    summary: dict[str, float]
    skipped: dict[str, str]

    def metric_columns(self) -> list[str]:
        return [m for m in PAIR_METRICS if any(m in row for row in self.rows)]

    def write_csv(self, path: Path | str) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        columns = ["pair_id"] + self.metric_columns()
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore")
            writer.writeheader()
            for row in self.rows:
                writer.writerow(row)
        return path

    def table(self) -> str:
        lines = [f"pairs evaluated: {len(self.rows)}"]
        for name, value in sorted(self.summary.items()):
            lines.append(f"{name:>12}: {value:.6f}")
        for name, reason in sorted(self.skipped.items()):
            lines.append(f"{name:>12}: {reason}")
        return "\n".join(lines)


def evaluate(
    pairs,
    metrics=("ssim", "l1"),
    feature_extractor=None,
    lpips_fn=None,
    class_probs_fn=None,
) -> EvalReport:
    """Score (pair_id, generated, target) triples with images in [-1, 1].

    Per-pair metrics (ssim, l1, lpips) fill the report rows; set-level
    metrics (fid, is) aggregate over the whole collection. A metric whose
    external model is unavailable is reported as skipped, never silently
    substituted.
    """
    wanted = tuple(m.strip().lower() for m in metrics)
    unknown = set(wanted) - set(PAIR_METRICS) - set(SET_METRICS)
    if unknown:
        raise ValueError(f"unknown metrics: {sorted(unknown)}")

    rows: list[dict] = []
    gen_feats: list[np.ndarray] = []
    tgt_feats: list[np.ndarray] = []
    probs: list[np.ndarray] = []
    collect_fid = "fid" in wanted and feature_extractor is not None
    collect_is = "is" in wanted and class_probs_fn is not None
    for pair_id, generated, target in pairs:
        gen_t = _as_chw_tensor(generated)
        tgt_t = _as_chw_tensor(target)
        gen01 = (gen_t + 1.0) / 2.0
        tgt01 = (tgt_t + 1.0) / 2.0
        row: dict = {"pair_id": pair_id}
        if "ssim" in wanted:
            row["ssim"] = ssim(gen01, tgt01)
        if "l1" in wanted:
            row["l1"] = float((gen01 - tgt01).abs().mean())
        if "lpips" in wanted and lpips_fn is not None:
            row["lpips"] = float(lpips_fn(generated, target))
        rows.append(row)
        if collect_fid:
            gen_feats.append(pooled_features(feature_extractor, gen_t))
            tgt_feats.append(pooled_features(feature_extractor, tgt_t))
        if collect_is:
            probs.append(np.asarray(class_probs_fn(generated), dtype=np.float64))

    skipped: dict[str, str] = {}
    summary: dict[str, float] = {}
    for metric in PAIR_METRICS:
        values = [row[metric] for row in rows if metric in row]
        if values:
            summary[metric] = float(np.mean(values))
    if "lpips" in wanted and lpips_fn is None:
        skipped["lpips"] = SKIPPED_EXTRACTOR
    if "fid" in wanted:
        if not collect_fid:
            skipped["fid"] = SKIPPED_EXTRACTOR
        elif len(gen_feats) < 2:
            skipped["fid"] = "skipped: needs at least 2 pairs"
        else:
            summary["fid"] = fid(np.stack(tgt_feats), np.stack(gen_feats))
    if "is" in wanted:
        if not collect_is:
            skipped["is"] = SKIPPED_EXTRACTOR
        else:
            summary["is"] = inception_score(np.stack(probs))
    return EvalReport(rows=rows, summary=summary, skipped=skipped)
