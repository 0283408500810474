"""Task graphs: data model, validation, random generators and disjoint union.

Tasks are dense integers ``0..n_tasks-1``. Each task carries a positive
computation amount and each edge ``(src, dst)`` carries the amount of data
``src`` produces for ``dst``.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import CyclicGraphError, ValidationError

DEFAULT_COMPUTE_RANGE = (10.0, 100.0)
DEFAULT_DATA_VALUE = 20.0


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class TaskGraph:
    """Immutable DAG of tasks with computation and data amounts.

    Edges are stored sorted by ``(src, dst)``. ``names`` keeps the original
    identifiers when the graph was loaded from a file with non-dense ids.
    """

    def __init__(
        self,
        compute: Iterable[float],
        edges: Iterable[tuple[int, int, float]] = (),
        *,
        names: Sequence | None = None,
        check: bool = True,
    ):
        compute = np.asarray(compute if isinstance(compute, np.ndarray) else list(compute), dtype=np.float64)
        if compute.ndim != 1:
            raise ValidationError("compute must be a 1-D sequence")
        edges = sorted((int(s), int(d), float(w)) for s, d, w in edges)
        self.compute = _frozen(compute.copy())
        self.src = _frozen(np.array([e[0] for e in edges], dtype=np.int64))
        self.dst = _frozen(np.array([e[1] for e in edges], dtype=np.int64))
        self.data = _frozen(np.array([e[2] for e in edges], dtype=np.float64))
        self.names = tuple(names) if names is not None else None
        if self.names is not None and len(self.names) != len(self.compute):
            raise ValidationError("names must have one entry per task")
        if check:
            report = validate(self)
            if not report.ok:
                if any(v.kind == "cycle" for v in report.violations):
                    raise CyclicGraphError(str(report))
                raise ValidationError(str(report))

    @property
    def n_tasks(self) -> int:
        return len(self.compute)

    @property
    def n_edges(self) -> int:
        return len(self.src)

    def edges(self) -> list[tuple[int, int, float]]:
        return list(zip(self.src.tolist(), self.dst.tolist(), self.data.tolist()))

    @cached_property
    def successors(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.n_tasks)]
        for s, d in zip(self.src.tolist(), self.dst.tolist()):
            out[s].append(d)
        return out

    @cached_property
    def predecessors(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.n_tasks)]
        for s, d in zip(self.src.tolist(), self.dst.tolist()):
            out[d].append(s)
        return out

    @cached_property
    def in_edges(self) -> list[list[int]]:
        """Edge indices entering each task."""
        out: list[list[int]] = [[] for _ in range(self.n_tasks)]
        for k, d in enumerate(self.dst.tolist()):
            out[d].append(k)
        return out

    @cached_property
    def out_edges(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.n_tasks)]
        for k, s in enumerate(self.src.tolist()):
            out[s].append(k)
        return out

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TaskGraph):
            return NotImplemented
        return (
            np.array_equal(self.compute, other.compute)
            and np.array_equal(self.src, other.src)
            and np.array_equal(self.dst, other.dst)
            and np.array_equal(self.data, other.data)
        )

    def __hash__(self) -> int:
        return hash((self.compute.tobytes(), self.src.tobytes(), self.dst.tobytes(), self.data.tobytes()))

    def __repr__(self) -> str:
        return f"TaskGraph(n_tasks={self.n_tasks}, n_edges={self.n_edges})"

    # -- serialization -------------------------------------------------

    def to_dict(self) -> dict:
        ids = list(self.names) if self.names is not None else list(range(self.n_tasks))
        return {
            "tasks": [{"id": ids[i], "compute": float(c)} for i, c in enumerate(self.compute.tolist())],
            "edges": [
                {"src": ids[s], "dst": ids[d], "data": float(w)} for s, d, w in self.edges()
            ],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "TaskGraph":
        try:
            tasks = obj["tasks"]
            raw_edges = obj.get("edges", [])
            raw_ids = [t["id"] for t in tasks]
            compute_by_id = {t["id"]: float(t["compute"]) for t in tasks}
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed task graph: missing field {exc}") from None
        if len(compute_by_id) != len(raw_ids):
            raise ValidationError("malformed task graph: duplicate task ids")
        if all(isinstance(i, int) for i in raw_ids):
            ordered = sorted(raw_ids)
        else:
            ordered = raw_ids
        index = {tid: k for k, tid in enumerate(ordered)}
        edges = []
        for n, e in enumerate(raw_edges):
            try:
                edges.append((index[e["src"]], index[e["dst"]], float(e["data"])))
            except KeyError as exc:
                raise ValidationError(f"edges[{n}]: unknown task or missing field {exc}") from None
        dense = ordered == list(range(len(ordered)))
        return cls(
            [compute_by_id[t] for t in ordered],
            edges,
            names=None if dense else ordered,
        )

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_json(cls, text: str) -> "TaskGraph":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid JSON at line {exc.lineno} col {exc.colno}: {exc.msg}") from None
        return cls.from_dict(obj)


# -- validation --------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    kind: str  # self_loop | duplicate_edge | dangling_edge | nonpositive_compute | negative_data | cycle
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}

    def __str__(self) -> str:
        if self.ok:
            return "OK"
        return "; ".join(f"{v.kind}: {v.detail}" for v in self.violations)


def validate(g: TaskGraph) -> ValidationReport:
    """Report every invariant violation of ``g`` (empty report means OK)."""
    out: list[Violation] = []
    n = g.n_tasks
    for i, c in enumerate(g.compute.tolist()):
        if not (c > 0 and np.isfinite(c)):
            out.append(Violation("nonpositive_compute", f"task {i} has compute {c}"))
    seen: set[tuple[int, int]] = set()
    well_formed = []
    for s, d, w in g.edges():
        if not (0 <= s < n and 0 <= d < n):
            out.append(Violation("dangling_edge", f"edge {s}->{d} references a missing task"))
            continue
        if s == d:
            out.append(Violation("self_loop", f"edge {s}->{d}"))
            continue
        if (s, d) in seen:
            out.append(Violation("duplicate_edge", f"edge {s}->{d}"))
            continue
        if not (w >= 0 and np.isfinite(w)):
            out.append(Violation("negative_data", f"edge {s}->{d} has data {w}"))
        seen.add((s, d))
        well_formed.append((s, d))
    if _kahn(n, well_formed) is None:
        out.append(Violation("cycle", "task graph is not acyclic"))
    return ValidationReport(tuple(out))


def _kahn(n: int, edges: Iterable[tuple[int, int]]) -> list[int] | None:
    succ: list[list[int]] = [[] for _ in range(n)]
    indeg = [0] * n
    for s, d in edges:
        succ[s].append(d)
        indeg[d] += 1
    heap = [i for i in range(n) if indeg[i] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        u = heapq.heappop(heap)
        order.append(u)
        for v in succ[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                heapq.heappush(heap, v)
    return order if len(order) == n else None


def topological_order(g: TaskGraph) -> list[int]:
    """Topological order with ties broken by ascending task id."""
    order = _kahn(g.n_tasks, zip(g.src.tolist(), g.dst.tolist()))
    if order is None:
        raise CyclicGraphError("task graph contains a cycle")
    return order


# -- generation --------------------------------------------------------


@dataclass(frozen=True)
class EdgeProbability:
    n_tasks: int
    ep: float


@dataclass(frozen=True)
class WidthDepth:
    width: int
    depth: int


@dataclass(frozen=True)
class GenSpec:
    method: EdgeProbability | WidthDepth
    compute_range: tuple[float, float] = DEFAULT_COMPUTE_RANGE
    data_value: float = DEFAULT_DATA_VALUE
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.compute_range
        if not (0 < lo <= hi and np.isfinite(hi)):
            raise ValidationError(f"compute_range must satisfy 0 < lo <= hi, got {self.compute_range}")
        if not (self.data_value >= 0 and np.isfinite(self.data_value)):
            raise ValidationError(f"data_value must be >= 0, got {self.data_value}")
        m = self.method
        if isinstance(m, EdgeProbability):
            if not 0.0 <= m.ep <= 1.0:
                raise ValidationError(f"edge probability must lie in [0, 1], got {m.ep}")
            if m.n_tasks < 1:
                raise ValidationError("n_tasks must be >= 1")
        elif isinstance(m, WidthDepth):
            if m.width < 1 or m.depth < 1:
                raise ValidationError("width and depth must be >= 1")
        else:
            raise ValidationError(f"unknown generation method {m!r}")


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(int(seed) & 0xFFFFFFFFFFFFFFFF)


def generate_ep(spec: GenSpec) -> TaskGraph:
    """Random DAG: each pair ``u < v`` is joined by ``u -> v`` with probability ``ep``."""
    if not isinstance(spec.method, EdgeProbability):
        raise ValidationError("generate_ep requires an EdgeProbability spec")
    n, ep = spec.method.n_tasks, spec.method.ep
    rng = _rng(spec.seed)
    compute = rng.uniform(*spec.compute_range, size=n)
    coins = rng.random((n, n)) < ep
    us, vs = np.nonzero(np.triu(coins, k=1))
    edges = [(u, v, spec.data_value) for u, v in zip(us.tolist(), vs.tolist())]
    return TaskGraph(compute, edges, check=False)


def generate_layered(spec: GenSpec) -> TaskGraph:
    """Random layered DAG with ``depth`` layers of ``width`` tasks.

    Every task outside the last layer gets between 1 and ``width`` distinct
    successors drawn from the next layer.
    """
    if not isinstance(spec.method, WidthDepth):
        raise ValidationError("generate_layered requires a WidthDepth spec")
    w, depth = spec.method.width, spec.method.depth
    rng = _rng(spec.seed)
    compute = rng.uniform(*spec.compute_range, size=w * depth)
    edges = []
    for layer in range(depth - 1):
        nxt = np.arange((layer + 1) * w, (layer + 2) * w)
        for t in range(layer * w, (layer + 1) * w):
            k = int(rng.integers(1, w + 1))
            for v in rng.choice(nxt, size=k, replace=False).tolist():
                edges.append((t, v, spec.data_value))
    return TaskGraph(compute, edges, check=False)


def generate(spec: GenSpec) -> TaskGraph:
    if isinstance(spec.method, EdgeProbability):
        return generate_ep(spec)
    return generate_layered(spec)


def disjoint_union(graphs: Sequence[TaskGraph]) -> tuple[TaskGraph, list[int]]:
    """Relabel and concatenate ``graphs``; ``offsets[k]`` is the first id of component ``k``."""
    if not graphs:
        raise ValidationError("disjoint_union needs at least one graph")
    offsets, compute, edges = [], [], []
    base = 0
    for g in graphs:
        offsets.append(base)
        compute.append(g.compute)
        edges.extend((s + base, d + base, w) for s, d, w in g.edges())
        base += g.n_tasks
    return TaskGraph(np.concatenate(compute), edges, check=False), offsets


def component_ids(offsets: Sequence[int], n_tasks: int) -> np.ndarray:
    """Per-task component index recovered from union offsets."""
    return np.searchsorted(np.asarray(offsets), np.arange(n_tasks), side="right") - 1
