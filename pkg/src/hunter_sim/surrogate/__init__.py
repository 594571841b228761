from .ggcn import AdamW, DimensionError, GgcnModel, TrainingError, loss_and_gradients
from .graph import GraphBatch, HeteroGraph, Normalizer, build_graph, pack, thermal_input
from .io import load_model, save_model
from .scorer import GgcnSurrogate
from .train import FineTuner, LossCurve, Sample, TrainConfig, evaluate, fine_tune, pretrain

__all__ = [
    "AdamW",
    "DimensionError",
    "FineTuner",
    "GgcnModel",
    "GgcnSurrogate",
    "GraphBatch",
    "HeteroGraph",
    "LossCurve",
    "Normalizer",
    "Sample",
    "TrainConfig",
    "TrainingError",
    "build_graph",
    "evaluate",
    "fine_tune",
    "load_model",
    "loss_and_gradients",
    "pack",
    "pretrain",
    "save_model",
    "thermal_input",
]
