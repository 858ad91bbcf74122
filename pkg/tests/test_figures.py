"""Figure rendering writes real PNGs without a display."""

from posetransfer.figures import save_loss_curves, save_metric_histograms

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def is_png(path):
    with open(path, "rb") as fh:
        return fh.read(8) == PNG_MAGIC


def test_loss_curves_render(tmp_path):
    records = [
        {"step": i, "discriminator": 2.0 - 0.1 * i, "adversarial": 1.0, "l1": 0.5 / (i + 1),
         "perceptual": 0.3, "contextual": 0.2, "total": 2.0}
        for i in range(10)
    ]
    path = save_loss_curves(records, tmp_path / "curves" / "loss_curves.png")
    assert path.is_file() and is_png(path)


def test_metric_histograms_render(tmp_path):
    values = {"ssim": [0.7, 0.8, 0.9, 0.95], "l1": [0.1, 0.2, 0.05, 0.15]}
    path = save_metric_histograms(values, tmp_path / "metric_histograms.png")
    assert path.is_file() and is_png(path)


def test_single_metric_and_empty_values_still_render(tmp_path):
    one = save_metric_histograms({"ssim": [0.5, 0.6]}, tmp_path / "one.png")
    empty = save_metric_histograms({"ssim": []}, tmp_path / "empty.png")
    assert is_png(one) and is_png(empty)
