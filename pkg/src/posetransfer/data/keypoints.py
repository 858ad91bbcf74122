"""Body-joint annotations and their CSV on-disk format.

The keypoints file is a CSV with header ``name,keypoints_y,keypoints_x``.
Coordinate columns hold bracketed integer lists of length 18 (quoted, since
they contain commas); a value of -1 marks an invisible joint.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

# Fixed joint order shared by every heatmap channel.
JOINT_NAMES = (
    "nose",
    "neck",
    "right_shoulder",
    "right_elbow",
    "right_wrist",
    "left_shoulder",
    "left_elbow",
    "left_wrist",
    "right_hip",
    "right_knee",
    "right_ankle",
    "left_hip",
    "left_knee",
    "left_ankle",
    "right_eye",
    "left_eye",
    "right_ear",
    "left_ear",
)
NUM_JOINTS = len(JOINT_NAMES)


@dataclass
class Keypoints:
    """18 (x, y, visible) joint annotations for one image.

    Invisible joints keep whatever x/y they were constructed with but every
    consumer ignores those coordinates.
    """

    x: np.ndarray  # (18,) float
    y: np.ndarray  # (18,) float
    visible: np.ndarray  # (18,) bool

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        self.visible = np.asarray(self.visible, dtype=bool)
        for name, arr in (("x", self.x), ("y", self.y), ("visible", self.visible)):
            if arr.shape != (NUM_JOINTS,):
                raise ValueError(f"keypoints.{name} must have shape ({NUM_JOINTS},), got {arr.shape}")

    @classmethod
    def from_xy_lists(cls, xs, ys) -> "Keypoints":
        """Build from coordinate lists where -1 marks an invisible joint."""
        xs = np.asarray(xs, dtype=np.float64)
        ys = np.asarray(ys, dtype=np.float64)
        if xs.shape != (NUM_JOINTS,) or ys.shape != (NUM_JOINTS,):
            raise ValueError(f"expected {NUM_JOINTS} x and y coordinates, got {xs.shape} / {ys.shape}")
        visible = (xs != -1) & (ys != -1)
        return cls(x=xs, y=ys, visible=visible)

    def scaled(self, sx: float, sy: float) -> "Keypoints":
        """Rescale visible coordinates, e.g. after an image resize."""
        return Keypoints(
            x=np.where(self.visible, self.x * sx, self.x),
            y=np.where(self.visible, self.y * sy, self.y),
            visible=self.visible.copy(),
        )


def _parse_coord_list(text: str, column: str):
    try:
        values = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"column {column!r} is not a bracketed number list: {text!r}") from exc
    if not isinstance(values, list) or len(values) != NUM_JOINTS:
        raise ValueError(f"column {column!r} must list {NUM_JOINTS} values, got {text!r}")
    return values


def load_keypoints(path: str | Path):
    """Read a keypoints CSV.

    Returns ``(records, rejects)`` where records maps image name -> Keypoints
    and rejects lists ``(line_number, name, reason)`` for malformed rows.
    """
    records: dict[str, Keypoints] = {}
    rejects: list[tuple[int, str, str]] = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"name", "keypoints_y", "keypoints_x"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError(f"keypoints file {path} must have header name,keypoints_y,keypoints_x")
        for row in reader:
            name = (row.get("name") or "").strip()
            try:
                if not name:
                    raise ValueError("empty image name")
                ys = _parse_coord_list(row["keypoints_y"], "keypoints_y")
                xs = _parse_coord_list(row["keypoints_x"], "keypoints_x")
                records[name] = Keypoints.from_xy_lists(xs, ys)
            except ValueError as exc:
                rejects.append((reader.line_num, name, str(exc)))
    return records, rejects


def save_keypoints(records: dict[str, Keypoints], path: str | Path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["name", "keypoints_y", "keypoints_x"])
        for name, kp in records.items():
            ys = [int(round(v)) if vis else -1 for v, vis in zip(kp.y, kp.visible)]
            xs = [int(round(v)) if vis else -1 for v, vis in zip(kp.x, kp.visible)]
            writer.writerow([name, json.dumps(ys), json.dumps(xs)])
