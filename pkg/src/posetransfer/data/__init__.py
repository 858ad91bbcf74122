from .keypoints import JOINT_NAMES, Keypoints, load_keypoints, save_keypoints
from .heatmap import KeypointOutOfBounds, rasterize_pose_heatmap
from .edges import gaussian_blur, rgb_to_luminance, xdog_edge
from .dataset import (
    DatasetError,
    PairBatch,
    PairDataset,
    PairIndex,
    TrainingPair,
    batch_iterator,
    denormalize_image,
    load_image,
    load_pair_index,
    normalize_image,
)

__all__ = [
    "DatasetError",
    "JOINT_NAMES",
    "Keypoints",
    "KeypointOutOfBounds",
    "PairBatch",
    "PairDataset",
    "PairIndex",
    "TrainingPair",
    "batch_iterator",
    "denormalize_image",
    "gaussian_blur",
    "load_image",
    "load_keypoints",
    "load_pair_index",
    "normalize_image",
    "rasterize_pose_heatmap",
    "rgb_to_luminance",
    "save_keypoints",
    "xdog_edge",
]
