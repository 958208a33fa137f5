"""Distance-kernel graph attention, temporal encoding and evaluation over embedding bundles."""

from ._core import (
    Bundle,
    Model,
    SyntheticSpec,
    TioError,
    TrainConfig,
    auc,
    average_precision,
    explain,
    frame_attention,
    generate_synthetic_bundle,
    infer,
    kernel_weights,
    load_bundle,
    load_checkpoint,
    normalize_distances,
    ops_kernel,
    ops_multihead,
    pairwise_distance,
    recall_at_k,
    save_checkpoint,
    temporal_adjacency,
    train,
    write_bundle,
)

__all__ = [
    "Bundle",
    "Model",
    "SyntheticSpec",
    "TioError",
    "TrainConfig",
    "auc",
    "average_precision",
    "explain",
    "frame_attention",
    "generate_synthetic_bundle",
    "infer",
    "kernel_weights",
    "load_bundle",
    "load_checkpoint",
    "normalize_distances",
    "ops_kernel",
    "ops_multihead",
    "pairwise_distance",
    "recall_at_k",
    "save_checkpoint",
    "temporal_adjacency",
    "train",
    "write_bundle",
]
