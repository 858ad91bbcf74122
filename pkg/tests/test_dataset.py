import numpy as np
import pytest
import torch

import posetransfer.data.dataset as dataset_mod
from posetransfer.config import DataConfig, XdogParams
from posetransfer.data import (
    DatasetError,
    PairDataset,
    batch_iterator,
    denormalize_image,
    load_pair_index,
    normalize_image,
)

from conftest import HEIGHT, WIDTH, IMAGE_NAMES, PAIRS


def test_normalize_endpoints():
    pixels = np.zeros((2, 2, 3), dtype=np.uint8)
    pixels[0, 0] = 255
    out = normalize_image(pixels)
    assert out.shape == (3, 2, 2)
    assert out.dtype == np.float32
    assert out[0, 0, 0] == 1.0
    assert out[0, 1, 1] == -1.0


def test_normalize_denormalize_uint8_round_trip():
    rng = np.random.default_rng(0)
    pixels = rng.integers(0, 256, size=(16, 12, 3), dtype=np.uint8)
    assert np.array_equal(denormalize_image(normalize_image(pixels)), pixels)


def test_pair_index_keeps_manifest_order(corpus):
    index = load_pair_index(corpus["pairs_file"], corpus["image_dir"], corpus["keypoints_file"])
    assert [(d.source_name, d.target_name) for d in index.descriptors] == list(PAIRS)
    assert index.skipped == []
    assert index.descriptors[0].pair_id == "a.png->b.png"


def test_pair_index_skips_broken_rows(corpus, caplog):
    pairs_file = corpus["root"] / "pairs_broken.csv"
    pairs_file.write_text("from,to\na.png,b.png\nghost.png,b.png\na.png,\n")
    with caplog.at_level("WARNING"):
        index = load_pair_index(pairs_file, corpus["image_dir"], corpus["keypoints_file"])
    assert len(index.descriptors) == 1
    assert len(index.skipped) == 2
    reasons = [reason for _, _, reason in index.skipped]
    assert any("missing image file" in r for r in reasons)
    assert any("empty image name" in r for r in reasons)


def test_pair_index_strict_raises_with_location(corpus):
    pairs_file = corpus["root"] / "pairs_broken.csv"
    pairs_file.write_text("from,to\nghost.png,b.png\n")
    with pytest.raises(DatasetError, match=r"pairs_broken\.csv:2"):
        load_pair_index(pairs_file, corpus["image_dir"], corpus["keypoints_file"], strict=True)


def test_pair_index_rejects_wrong_header(corpus):
    pairs_file = corpus["root"] / "pairs_badheader.csv"
    pairs_file.write_text("src,dst\na.png,b.png\n")
    with pytest.raises(DatasetError, match="from,to"):
        load_pair_index(pairs_file, corpus["image_dir"], corpus["keypoints_file"])


def test_dataset_item_contract(corpus):
    cfg = corpus["config"]
    index = load_pair_index(corpus["pairs_file"], corpus["image_dir"], corpus["keypoints_file"])
    ds = PairDataset(index, cfg.data)
    assert len(ds) == len(PAIRS)
    pair = ds[0]
    assert pair.source_image.shape == (3, HEIGHT, WIDTH)
    assert pair.source_pose.shape == (18, HEIGHT, WIDTH)
    assert pair.source_edge.shape == (1, HEIGHT, WIDTH)
    assert pair.source_image.min() >= -1.0 and pair.source_image.max() <= 1.0
    assert pair.target_edge.min() >= 0.0 and pair.target_edge.max() <= 1.0
    assert pair.source_pose.max() <= 1.0


def test_edge_cache_round_trip(corpus, monkeypatch):
    cfg = corpus["config"]
    cache = corpus["root"] / "cache"
    index = load_pair_index(corpus["pairs_file"], corpus["image_dir"], corpus["keypoints_file"])

    calls = {"n": 0}
    real = dataset_mod.xdog_edge

    def counting(gray, params):
        calls["n"] += 1
        return real(gray, params)

    monkeypatch.setattr(dataset_mod, "xdog_edge", counting)

    ds = PairDataset(index, cfg.data, cache_dir=cache)
    first = ds[0]
    assert calls["n"] == 2  # both sides computed once
    cached_files = list(cache.glob("edges-*/*.npy"))
    assert len(cached_files) == 2

    ds2 = PairDataset(index, cfg.data, cache_dir=cache)
    again = ds2[0]
    assert calls["n"] == 2  # cache hit, no recompute
    assert torch.equal(first.source_edge, again.source_edge)


def test_edge_cache_key_isolates_parameter_sets(corpus):
    cfg = corpus["config"]
    cache = corpus["root"] / "cache"
    index = load_pair_index(corpus["pairs_file"], corpus["image_dir"], corpus["keypoints_file"])
    PairDataset(index, cfg.data, cache_dir=cache)[0]

    other = DataConfig(
        image_height=cfg.data.image_height,
        image_width=cfg.data.image_width,
        xdog=XdogParams(sigma=1.2),
    )
    PairDataset(index, other, cache_dir=cache)[0]
    dirs = sorted(p.name for p in cache.iterdir())
    assert len(dirs) == 2 and all(d.startswith("edges-") for d in dirs)


def test_batch_iterator_sizes_and_final_short_batch(corpus):
    cfg = corpus["config"]
    index = load_pair_index(corpus["pairs_file"], corpus["image_dir"], corpus["keypoints_file"])
    # replicate descriptors to get 10 items
    index.descriptors = (index.descriptors * 4)[:10]
    ds = PairDataset(index, cfg.data)
    sizes = [len(b) for b in batch_iterator(ds, batch_size=4, shuffle=False, seed=0)]
    assert sizes == [4, 4, 2]


def test_batch_iterator_unshuffled_preserves_order(corpus):
    cfg = corpus["config"]
    index = load_pair_index(corpus["pairs_file"], corpus["image_dir"], corpus["keypoints_file"])
    ds = PairDataset(index, cfg.data)
    batches = list(batch_iterator(ds, batch_size=1, shuffle=False, seed=5))
    names = [(b.source_names[0], b.target_names[0]) for b in batches]
    assert names == list(PAIRS)


def test_batch_iterator_shuffle_is_reproducible(corpus):
    cfg = corpus["config"]
    index = load_pair_index(corpus["pairs_file"], corpus["image_dir"], corpus["keypoints_file"])
    index.descriptors = (index.descriptors * 4)[:10]
    ds = PairDataset(index, cfg.data)

    def order(seed):
        return [b.source_names[0] + ">" + b.target_names[0] for b in batch_iterator(ds, 1, True, seed)]

    assert order(7) == order(7)
    # 3 items can collide between two seeds (1 chance in 3! = 6); at 10 items
    # a collision would mean the seed is ignored
    assert order(7) != order(8)


def test_batch_iterator_empty_dataset_raises(corpus):
    cfg = corpus["config"]
    index = load_pair_index(corpus["pairs_file"], corpus["image_dir"], corpus["keypoints_file"])
    index.descriptors = []
    ds = PairDataset(index, cfg.data)
    with pytest.raises(DatasetError):
        list(batch_iterator(ds, 2, False, 0))


def test_batch_iterator_rejects_bad_batch_size(corpus):
    cfg = corpus["config"]
    index = load_pair_index(corpus["pairs_file"], corpus["image_dir"], corpus["keypoints_file"])
    ds = PairDataset(index, cfg.data)
    with pytest.raises(ValueError):
        list(batch_iterator(ds, 0, False, 0))


def test_load_image_resizes(corpus):
    from posetransfer.data.dataset import load_image

    img = load_image(corpus["image_dir"] / IMAGE_NAMES[0], 32, 24)
    assert img.shape == (3, 32, 24)
