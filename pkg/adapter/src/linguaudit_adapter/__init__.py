"""Bridge from real transformer checkpoints to the linguaudit wire formats.

The adapter fine-tunes per-language models and exports three kinds of files
that the audit toolkit consumes directly: generation logs (JSONL), ensemble
loss matrices (paired CSVs), and per-epoch confidence trajectories (JSONL).
It performs no analysis of its own; every measurement happens downstream.
"""

from .config import AdapterConfig, AdapterError, load_config
from .export import (
    finetune_and_export_ensemble,
    finetune_and_export_generations,
    finetune_and_export_trajectories,
)

__version__ = "0.1.0"

__all__ = [
    "AdapterConfig",
    "AdapterError",
    "load_config",
    "finetune_and_export_generations",
    "finetune_and_export_ensemble",
    "finetune_and_export_trajectories",
]
