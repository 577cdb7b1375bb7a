"""Speech-image alignment: MFCC front end, embedders, and retrieval metrics."""

from ._core import (
    MAX_FRAMES,
    ConfigError,
    DatasetError,
    Model,
    audio_param_count,
    frame_count,
    generate_synthetic,
    hinge_loss,
    image_param_count,
    lr_at,
    mfcc,
    preprocess,
    presets,
    read_wav_mfcc,
    recall_at_k,
    restart_points,
    similarity_matrix,
    train,
)

__all__ = [
    "MAX_FRAMES",
    "ConfigError",
    "DatasetError",
    "Model",
    "audio_param_count",
    "frame_count",
    "generate_synthetic",
    "hinge_loss",
    "image_param_count",
    "lr_at",
    "mfcc",
    "preprocess",
    "presets",
    "read_wav_mfcc",
    "recall_at_k",
    "restart_points",
    "similarity_matrix",
    "train",
]
