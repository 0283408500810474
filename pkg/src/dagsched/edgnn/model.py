"""Edge-aware directed GCN scheduler model: parameters, forward pass, loss and gradients."""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import CheckpointError, IncompatibleModelError
from ..featurize import LabeledInputGraph, MinMaxScaler
from .layers import LAYER_KEYS, GraphStructure, edgnn_layer_backward, edgnn_layer_forward

FORMAT_VERSION = 1


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


@dataclass(eq=False)
class EdgnnModel:
    n_machines: int
    hidden: int = 128
    n_layers: int = 4
    agg: str = "sum"
    lam: float = 1.0
    params: dict[str, np.ndarray] = field(default_factory=dict)
    scaler: MinMaxScaler | None = None

    @classmethod
    def init(cls, n_machines: int, hidden: int = 128, n_layers: int = 4, agg: str = "sum",
             lam: float = 1.0, seed: int = 0) -> "EdgnnModel":
        """Glorot-uniform weights and zero biases, drawn in a fixed order from ``seed``."""
        if n_layers < 1:
            raise ValueError("a model needs at least one layer")
        rng = np.random.default_rng(int(seed) & 0xFFFFFFFFFFFFFFFF)
        h, nc = hidden, n_machines
        p: dict[str, np.ndarray] = {
            "proj.node.W": glorot(rng, nc, h),
            "proj.node.b": np.zeros(h),
            "proj.edge.W": glorot(rng, nc * nc, h),
            "proj.edge.b": np.zeros(h),
        }
        for layer in range(n_layers):
            for k in LAYER_KEYS:
                p[f"layer{layer}.{k}"] = np.zeros(h) if k.startswith("b_") else glorot(rng, h, h)
        p["head.node.W"] = glorot(rng, h, nc)
        p["head.node.b"] = np.zeros(nc)
        p["head.edge.W"] = glorot(rng, h, nc)
        p["head.edge.b"] = np.zeros(nc)
        return cls(n_machines, hidden, n_layers, agg, lam, p)

    def layer_weights(self, layer: int) -> dict[str, np.ndarray]:
        return {k: self.params[f"layer{layer}.{k}"] for k in LAYER_KEYS}

    def copy(self) -> "EdgnnModel":
        return EdgnnModel(self.n_machines, self.hidden, self.n_layers, self.agg, self.lam,
                          {k: v.copy() for k, v in self.params.items()}, self.scaler)

    def check_compatible(self, ig: LabeledInputGraph) -> None:
        if ig.n_machines != self.n_machines:
            raise IncompatibleModelError(
                f"model was trained for {self.n_machines} machines, input graph has {ig.n_machines}"
            )

    def structure(self, ig: LabeledInputGraph) -> GraphStructure:
        return GraphStructure.build(ig.graph.n_tasks, ig.graph.src, ig.graph.dst, self.agg)


def _inputs(model: EdgnnModel, ig: LabeledInputGraph):
    model.check_compatible(ig)
    if model.scaler is not None:
        ig = model.scaler.transform(ig)
    return ig.node_features, ig.edge_features


def model_forward(model: EdgnnModel, ig: LabeledInputGraph, gs: GraphStructure | None = None,
                  *, need_edges: bool = True, cache: list | None = None):
    """Node logits ``(n_tasks, n_machines)`` and edge logits ``(n_edges, n_machines)``.

    With ``need_edges=False`` the last edge update and the edge head are skipped
    and ``None`` is returned for the edge logits.
    """
    xn, xe = _inputs(model, ig)
    gs = gs or model.structure(ig)
    p = model.params
    hn = xn @ p["proj.node.W"] + p["proj.node.b"]
    he = xe @ p["proj.edge.W"] + p["proj.edge.b"]
    for layer in range(model.n_layers):
        last = layer == model.n_layers - 1
        c = {} if cache is not None else None
        hn, he = edgnn_layer_forward(hn, he, gs, model.layer_weights(layer),
                                     with_edges=need_edges or not last, cache=c)
        if cache is not None:
            cache.append(c)
    node_logits = hn @ p["head.node.W"] + p["head.node.b"]
    edge_logits = he @ p["head.edge.W"] + p["head.edge.b"] if need_edges else None
    if cache is not None:
        cache.append({"h_node": hn, "h_edge": he, "x_node": xn, "x_edge": xe})
    return node_logits, edge_logits


def log_softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(logits: np.ndarray, labels: np.ndarray) -> float:
    if len(labels) == 0:
        return 0.0
    return float(-log_softmax(logits)[np.arange(len(labels)), labels].mean())


def loss(node_logits, edge_logits, node_labels, edge_labels, lam: float = 1.0) -> float:
    """Mean node cross-entropy plus ``lam`` times mean edge cross-entropy."""
    if node_labels is None or edge_labels is None:
        raise ValueError("loss needs node and edge labels")
    total = cross_entropy(node_logits, np.asarray(node_labels))
    if lam:
        total += lam * cross_entropy(edge_logits, np.asarray(edge_labels))
    return total


def _ce_grad(logits: np.ndarray, labels: np.ndarray, scale: float) -> np.ndarray:
    g = softmax(logits)
    if len(labels):
        g[np.arange(len(labels)), labels] -= 1.0
        g *= scale / len(labels)
    return g


def backward(model: EdgnnModel, ig: LabeledInputGraph, gs: GraphStructure | None = None):
    """Loss and exact gradients for every parameter: ``(loss_value, grads)``."""
    if not ig.labeled:
        raise ValueError("backward needs a labeled input graph")
    gs = gs or model.structure(ig)
    cache: list = []
    node_logits, edge_logits = model_forward(model, ig, gs, cache=cache)
    value = loss(node_logits, edge_logits, ig.node_labels, ig.edge_labels, model.lam)

    p = model.params
    top = cache[-1]
    g_nl = _ce_grad(node_logits, ig.node_labels, 1.0)
    g_el = _ce_grad(edge_logits, ig.edge_labels, model.lam)
    grads = {
        "head.node.W": top["h_node"].T @ g_nl,
        "head.node.b": g_nl.sum(axis=0),
        "head.edge.W": top["h_edge"].T @ g_el,
        "head.edge.b": g_el.sum(axis=0),
    }
    d_node = g_nl @ p["head.node.W"].T
    d_edge = g_el @ p["head.edge.W"].T
    for layer in reversed(range(model.n_layers)):
        lg, d_node, d_edge = edgnn_layer_backward(d_node, d_edge, gs, model.layer_weights(layer), cache[layer])
        for k, v in lg.items():
            grads[f"layer{layer}.{k}"] = v
    grads["proj.node.W"] = top["x_node"].T @ d_node
    grads["proj.node.b"] = d_node.sum(axis=0)
    grads["proj.edge.W"] = top["x_edge"].T @ d_edge
    grads["proj.edge.b"] = d_edge.sum(axis=0)
    return value, grads


# -- checkpoints ---------------------------------------------------------


def save_model(model: EdgnnModel, path) -> None:
    """Write a JSON checkpoint; float repr round-trips every weight exactly."""
    obj = {
        "format_version": FORMAT_VERSION,
        "n_machines": model.n_machines,
        "hidden": model.hidden,
        "layers": model.n_layers,
        "agg": model.agg,
        "lambda": model.lam,
        "weights": {k: {"shape": list(v.shape), "data": v.ravel().tolist()} for k, v in model.params.items()},
    }
    if model.scaler is not None:
        obj["scaler"] = {k: getattr(model.scaler, k).tolist() for k in ("node_lo", "node_span", "edge_lo", "edge_span")}
    Path(path).write_text(json.dumps(obj))


def _array(name: str, spec: dict) -> np.ndarray:
    shape = tuple(spec["shape"])
    if "data" in spec:
        a = np.asarray(spec["data"], dtype=np.float64)
    elif "data_b64" in spec:
        a = np.frombuffer(base64.b64decode(spec["data_b64"]), dtype="<f8").astype(np.float64)
    else:
        raise CheckpointError(f"weight {name} has no data")
    if a.size != int(np.prod(shape)):
        raise CheckpointError(f"weight {name} has {a.size} values, header says {shape}")
    return a.reshape(shape)


def load_model(path, n_machines: int | None = None) -> EdgnnModel:
    """Read a checkpoint written by :func:`save_model` and validate its header."""
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"{path}: not a valid checkpoint ({exc.msg} at line {exc.lineno})") from None
    if not isinstance(obj, dict) or obj.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {obj.get('format_version') if isinstance(obj, dict) else None}")
    try:
        model = EdgnnModel.init(int(obj["n_machines"]), int(obj["hidden"]), int(obj["layers"]),
                                obj["agg"], float(obj["lambda"]))
        weights = obj["weights"]
        for k, v in model.params.items():
            a = _array(k, weights[k])
            if a.shape != v.shape:
                raise CheckpointError(f"weight {k} has shape {a.shape}, expected {v.shape}")
            model.params[k] = a
        if "scaler" in obj:
            model.scaler = MinMaxScaler(**{k: np.asarray(v) for k, v in obj["scaler"].items()})
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"{path}: malformed checkpoint ({exc})") from None
    if n_machines is not None and n_machines != model.n_machines:
        raise IncompatibleModelError(f"checkpoint is for {model.n_machines} machines, network has {n_machines}")
    return model
