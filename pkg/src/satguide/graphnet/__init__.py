"""Graph network guidance: encoding, model, training and checkpoints."""

from .graph import FormulaGraph, batch_graphs, build_graph
from .model import (
    MLP_NAMES,
    PARAM_GROUPS,
    ModelParams,
    Prediction,
    aggregate_attention,
    aggregate_mean,
    backward,
    forward,
    iteration_losses,
    leaky_relu,
    loss,
    loss_and_grad,
    mlp_backward,
    mlp_forward,
    predict,
)
from .checkpoint import CheckpointError, load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint
from .train import TrainConfig, evaluate, train

__all__ = [
    "FormulaGraph", "batch_graphs", "build_graph", "MLP_NAMES", "PARAM_GROUPS", "ModelParams",
    "Prediction", "aggregate_attention", "aggregate_mean", "backward", "forward", "iteration_losses",
    "leaky_relu", "loss", "loss_and_grad", "mlp_backward", "mlp_forward", "predict",
    "CheckpointError", "load_checkpoint", "read_checkpoint", "save_checkpoint", "write_checkpoint",
    "TrainConfig", "evaluate", "train",
]
