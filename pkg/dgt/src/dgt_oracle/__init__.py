"""Dynamic graph transformer oracle for Dodona choicepoint graphs."""

from .config import DGTConfig
from .data import (
    EDGE_TYPES,
    RESERVED_TOKENS,
    VOCAB_VERSION,
    BatchedGraph,
    DataError,
    GraphExample,
    Vocab,
    collate,
    load_dataset,
)
from .metric import mean_metric, per_task_metric
from .model import DGT
from .serve import Server
from .train import evaluate, load_checkpoint, save_checkpoint, train

__all__ = [
    "DGT",
    "DGTConfig",
    "EDGE_TYPES",
    "RESERVED_TOKENS",
    "VOCAB_VERSION",
    "BatchedGraph",
    "DataError",
    "GraphExample",
    "Server",
    "Vocab",
    "collate",
    "evaluate",
    "load_checkpoint",
    "load_dataset",
    "mean_metric",
    "per_task_metric",
    "save_checkpoint",
    "train",
]
