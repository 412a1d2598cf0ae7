"""Minimal reverse-mode autodiff on float64 numpy arrays."""
from ndgrad.checkpoint import Checkpoint, load, save
from ndgrad.errors import (
    CheckpointError,
    NdgradError,
    NonFiniteError,
    ShapeMismatchError,
    TapeError,
)
from ndgrad.optim import AdamState, adam_step, clip_global_norm
from ndgrad.params import ParamTree
from ndgrad.tensor import Tape, Tensor, forward_graph

__all__ = [
    "AdamState",
    "Checkpoint",
    "CheckpointError",
    "NdgradError",
    "NonFiniteError",
    "ParamTree",
    "ShapeMismatchError",
    "Tape",
    "TapeError",
    "Tensor",
    "adam_step",
    "clip_global_norm",
    "forward_graph",
    "load",
    "save",
]
