"""From-scratch edge-aware directed GCN scheduler (numpy, float64)."""

from .layers import GraphStructure, edgnn_layer_backward, edgnn_layer_forward, gcn_layer_forward, undirected_adjacency
from .model import EdgnnModel, backward, load_model, loss, model_forward, save_model
from .train import Adam, TrainConfig, TrainReport, infer_schedule, train

__all__ = [
    "Adam", "EdgnnModel", "GraphStructure", "TrainConfig", "TrainReport", "backward",
    "edgnn_layer_backward", "edgnn_layer_forward", "gcn_layer_forward", "infer_schedule",
    "load_model", "loss", "model_forward", "save_model", "train", "undirected_adjacency",
]
