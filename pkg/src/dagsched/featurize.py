"""Input graphs for the learned scheduler: per-task and per-edge timing features plus teacher labels.

Node ``i`` gets the vector of its compute time on every machine, ``p_i / e_j``.
Edge ``(u, v)`` gets the transfer time of its data over every ordered machine
pair, ``d_uv / B_qr`` flattened row-major (``q * n_machines + r``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import ScheduleError, ValidationError
from .evaluator import Schedule
from .network import ComputeNetwork
from .taskgraph import TaskGraph, disjoint_union

ZERO_BANDWIDTH_SENTINEL = 1e6


@dataclass(frozen=True, eq=False)
class LabeledInputGraph:
    graph: TaskGraph
    node_features: np.ndarray  # (n_tasks, n_machines)
    edge_features: np.ndarray  # (n_edges, n_machines**2)
    n_machines: int
    component_id: np.ndarray  # (n_tasks,)
    node_labels: np.ndarray | None = None
    edge_labels: np.ndarray | None = None

    @property
    def labeled(self) -> bool:
        return self.node_labels is not None

    @property
    def n_components(self) -> int:
        return int(self.component_id.max()) + 1 if len(self.component_id) else 0

    def to_dict(self) -> dict:
        return {
            "graph": self.graph.to_dict(),
            "node_features": self.node_features.tolist(),
            "edge_features": self.edge_features.tolist(),
            "node_labels": None if self.node_labels is None else self.node_labels.tolist(),
            "edge_labels": None if self.edge_labels is None else self.edge_labels.tolist(),
            "n_machines": self.n_machines,
            "component_id": self.component_id.tolist(),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "LabeledInputGraph":
        try:
            g = TaskGraph.from_dict(obj["graph"])
            nc = int(obj["n_machines"])
            nf = np.asarray(obj["node_features"], dtype=np.float64).reshape(g.n_tasks, nc)
            ef = np.asarray(obj["edge_features"], dtype=np.float64).reshape(g.n_edges, nc * nc)
        except KeyError as exc:
            raise ValidationError(f"malformed dataset record: missing field {exc}") from None
        except ValueError as exc:
            raise ValidationError(f"malformed dataset record: {exc}") from None
        comp = obj.get("component_id")
        comp = np.zeros(g.n_tasks, dtype=np.int64) if comp is None else np.asarray(comp, dtype=np.int64)
        nl, el = obj.get("node_labels"), obj.get("edge_labels")
        return cls(
            g,
            nf,
            ef,
            nc,
            comp,
            None if nl is None else np.asarray(nl, dtype=np.int64),
            None if el is None else np.asarray(el, dtype=np.int64),
        )

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_json(cls, text: str) -> "LabeledInputGraph":
        return cls.from_dict(json.loads(text))


def node_features(g: TaskGraph, net: ComputeNetwork) -> np.ndarray:
    return g.compute[:, None] / net.speeds[None, :]


def edge_features(g: TaskGraph, net: ComputeNetwork, sentinel: float = ZERO_BANDWIDTH_SENTINEL) -> np.ndarray:
    nc = net.n_machines
    bw = net.bandwidth.copy()
    off = ~np.eye(nc, dtype=bool)
    connected = off & (bw > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        feats = g.data[:, None, None] / np.where(connected, bw, 1.0)[None, :, :]
    feats = np.where(connected[None], feats, 0.0)
    dead = off & ~connected
    if dead.any():
        feats = np.where(dead[None] & (g.data[:, None, None] > 0), sentinel, feats)
    return feats.reshape(g.n_edges, nc * nc)


def build_input_graph(g: TaskGraph, net: ComputeNetwork, sentinel: float = ZERO_BANDWIDTH_SENTINEL) -> LabeledInputGraph:
    """Unlabeled input graph with the same tasks and edges as ``g``."""
    return LabeledInputGraph(
        graph=g,
        node_features=node_features(g, net),
        edge_features=edge_features(g, net, sentinel),
        n_machines=net.n_machines,
        component_id=np.zeros(g.n_tasks, dtype=np.int64),
    )


def label_with_teacher(ig: LabeledInputGraph, s: Schedule) -> LabeledInputGraph:
    """Label each task with its teacher machine and each edge with its source task's label."""
    g = ig.graph
    if len(s.mapping) != g.n_tasks:
        raise ScheduleError(f"schedule maps {len(s.mapping)} tasks, input graph has {g.n_tasks}")
    labels = np.asarray(s.mapping, dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= ig.n_machines):
        raise ScheduleError("schedule uses a machine outside the input graph's network")
    return replace(ig, node_labels=labels, edge_labels=labels[g.src])


def union_inputs(records: Sequence[LabeledInputGraph]) -> LabeledInputGraph:
    """Disjoint union of input graphs; each record becomes its own component."""
    if not records:
        raise ValidationError("cannot take the union of zero input graphs")
    nc = records[0].n_machines
    if any(r.n_machines != nc for r in records):
        raise ValidationError("all records must share the same machine count")
    g, _ = disjoint_union([r.graph for r in records])
    comp, base = [], 0
    for r in records:
        comp.append(r.component_id + base)
        base += r.n_components
    labeled = all(r.labeled for r in records)
    return LabeledInputGraph(
        graph=g,
        node_features=np.concatenate([r.node_features for r in records]),
        edge_features=np.concatenate([r.edge_features for r in records]).reshape(-1, nc * nc),
        n_machines=nc,
        component_id=np.concatenate(comp),
        node_labels=np.concatenate([r.node_labels for r in records]) if labeled else None,
        edge_labels=np.concatenate([r.edge_labels for r in records]) if labeled else None,
    )


@dataclass(frozen=True)
class MinMaxScaler:
    """Per-column min-max scaling fitted on a training set (opt-in)."""

    node_lo: np.ndarray
    node_span: np.ndarray
    edge_lo: np.ndarray
    edge_span: np.ndarray

    @classmethod
    def fit(cls, records: Sequence[LabeledInputGraph]) -> "MinMaxScaler":
        nf = np.concatenate([r.node_features for r in records])
        ef = np.concatenate([r.edge_features for r in records])
        nc = records[0].n_machines

        def span(a, width):
            if len(a) == 0:
                return np.zeros(width), np.ones(width)
            lo, hi = a.min(axis=0), a.max(axis=0)
            s = hi - lo
            return lo, np.where(s > 0, s, 1.0)

        nlo, ns = span(nf, nc)
        elo, es = span(ef, nc * nc)
        return cls(nlo, ns, elo, es)

    def transform(self, ig: LabeledInputGraph) -> LabeledInputGraph:
        return replace(
            ig,
            node_features=(ig.node_features - self.node_lo) / self.node_span,
            edge_features=(ig.edge_features - self.edge_lo) / self.edge_span,
        )


def select_components(ig: LabeledInputGraph, components) -> LabeledInputGraph:
    """Induced sub-input-graph on the given components, with ids renumbered densely."""
    keep = np.isin(ig.component_id, np.asarray(sorted(components), dtype=np.int64))
    new_id = np.full(ig.graph.n_tasks, -1, dtype=np.int64)
    new_id[keep] = np.arange(int(keep.sum()))
    g = ig.graph
    ekeep = keep[g.src] & keep[g.dst]
    sub = TaskGraph(
        g.compute[keep],
        zip(new_id[g.src[ekeep]].tolist(), new_id[g.dst[ekeep]].tolist(), g.data[ekeep].tolist()),
        check=False,
    )
    _, comp = np.unique(ig.component_id[keep], return_inverse=True)
    return LabeledInputGraph(
        graph=sub,
        node_features=ig.node_features[keep],
        edge_features=ig.edge_features[ekeep],
        n_machines=ig.n_machines,
        component_id=comp.astype(np.int64),
        node_labels=None if ig.node_labels is None else ig.node_labels[keep],
        edge_labels=None if ig.edge_labels is None else ig.edge_labels[ekeep],
    )
