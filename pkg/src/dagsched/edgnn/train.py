"""Imitation training of the edge-aware GCN and inference as a scheduler."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import ValidationError
from ..evaluator import Schedule
from ..featurize import LabeledInputGraph, MinMaxScaler, select_components, union_inputs
from .model import EdgnnModel, backward, model_forward

log = logging.getLogger(__name__)


class Adam:
    def __init__(self, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for k, p in params.items():
            g = grads[k]
            if k not in self.m:
                self.m[k] = np.zeros_like(p)
                self.v[k] = np.zeros_like(p)
            m, v = self.m[k], self.v[k]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-3
    epochs: int = 300
    patience: int = 30
    seed: int = 0
    lam: float = 1.0
    splits: tuple[float, float, float] = (0.6, 0.2, 0.2)
    hidden: int = 128
    n_layers: int = 4
    agg: str = "sum"
    normalize: bool = False

    def __post_init__(self):
        if abs(sum(self.splits) - 1.0) > 1e-9 or min(self.splits) < 0:
            raise ValidationError(f"split fractions must be nonnegative and sum to 1, got {self.splits}")
        if not self.lr > 0:
            raise ValidationError("learning rate must be positive")


@dataclass
class TrainReport:
    train_loss: list[float] = field(default_factory=list)
    val_node_acc: list[float] = field(default_factory=list)
    val_edge_acc: list[float] = field(default_factory=list)
    best_epoch: int = -1
    test_node_acc: float = float("nan")
    test_edge_acc: float = float("nan")
    train_time_s: float = 0.0
    split_sizes: tuple[int, int, int] = (0, 0, 0)

    def to_dict(self) -> dict:
        return {
            "train_loss": self.train_loss,
            "val_node_acc": self.val_node_acc,
            "val_edge_acc": self.val_edge_acc,
            "best_epoch": self.best_epoch,
            "test_node_acc": self.test_node_acc,
            "test_edge_acc": self.test_edge_acc,
            "train_time_s": self.train_time_s,
            "split_sizes": list(self.split_sizes),
        }


def split_components(n_components: int, fractions: Sequence[float], seed: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Shuffle component ids and cut them into train/validation/test groups."""
    perm = np.random.default_rng(int(seed) & 0xFFFFFFFFFFFFFFFF).permutation(n_components)
    n_train = int(round(fractions[0] * n_components))
    n_val = int(round(fractions[1] * n_components))
    if fractions[0] > 0 and n_train == 0:
        n_train = 1
    return perm[:n_train], perm[n_train:n_train + n_val], perm[n_train + n_val:]


def accuracy(logits: np.ndarray, labels: np.ndarray) -> float:
    if len(labels) == 0:
        return float("nan")
    return float(np.mean(np.argmax(logits, axis=1) == labels))


def evaluate_accuracy(model: EdgnnModel, ig: LabeledInputGraph, gs=None) -> tuple[float, float]:
    node_logits, edge_logits = model_forward(model, ig, gs)
    return accuracy(node_logits, ig.node_labels), accuracy(edge_logits, ig.edge_labels)


def train(dataset: Sequence[LabeledInputGraph], cfg: TrainConfig = TrainConfig()) -> tuple[EdgnnModel, TrainReport]:
    """Fit a model to teacher labels with full-graph Adam steps.

    The dataset is split by component (whole graphs), never by node. The
    returned model is the one with the best validation node accuracy.
    """
    if not dataset:
        raise ValidationError("empty dataset")
    nc = dataset[0].n_machines
    if any(r.n_machines != nc for r in dataset):
        raise ValidationError("dataset records disagree on the number of machines")
    if not all(r.labeled for r in dataset):
        raise ValidationError("every dataset record needs teacher labels")
    t0 = time.perf_counter()
    full = union_inputs(dataset)
    tr_ids, va_ids, te_ids = split_components(full.n_components, cfg.splits, cfg.seed)
    parts = [select_components(full, ids) for ids in (tr_ids, va_ids, te_ids)]
    tr, va, te = parts

    model = EdgnnModel.init(nc, cfg.hidden, cfg.n_layers, cfg.agg, cfg.lam, seed=cfg.seed)
    if cfg.normalize:
        model.scaler = MinMaxScaler.fit([tr])
    gs_tr, gs_va, gs_te = (model.structure(p) for p in parts)
    opt = Adam(cfg.lr)
    report = TrainReport(split_sizes=(len(tr_ids), len(va_ids), len(te_ids)))
    has_val = va.graph.n_tasks > 0
    best_acc, best_params, since_best = -1.0, None, 0

    for epoch in range(cfg.epochs):
        value, grads = backward(model, tr, gs_tr)
        report.train_loss.append(value)
        opt.step(model.params, grads)
        if has_val:
            nacc, eacc = evaluate_accuracy(model, va, gs_va)
        else:
            nacc, eacc = evaluate_accuracy(model, tr, gs_tr)
        report.val_node_acc.append(nacc)
        report.val_edge_acc.append(eacc)
        if nacc > best_acc:
            best_acc, best_params, since_best = nacc, {k: v.copy() for k, v in model.params.items()}, 0
            report.best_epoch = epoch
        else:
            since_best += 1
        if epoch % 10 == 0:
            log.info("epoch %d loss %.4f val node acc %.4f", epoch, value, nacc)
        if since_best >= cfg.patience:
            break

    if best_params is not None:
        model.params = best_params
    if te.graph.n_tasks:
        report.test_node_acc, report.test_edge_acc = evaluate_accuracy(model, te, gs_te)
    report.train_time_s = time.perf_counter() - t0
    return model, report


def infer_schedule(model: EdgnnModel, ig: LabeledInputGraph) -> Schedule:
    """Map each task to the argmax of its node logits (ties to the lowest machine)."""
    node_logits, _ = model_forward(model, ig, need_edges=False)
    mapping = np.argmax(node_logits, axis=1)
    return Schedule.from_mapping(ig.graph, mapping.tolist(), model.n_machines)
