"""Exact evaluation of schedules: makespan by list simulation, throughput by bottleneck terms."""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InfeasibleOrderError, ScheduleError, ValidationError
from .network import INF, ComputeNetwork
from .taskgraph import TaskGraph, topological_order


@dataclass(frozen=True)
class Schedule:
    """Task-to-machine mapping plus the execution order on each machine."""

    mapping: tuple[int, ...]
    order: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "mapping", tuple(int(m) for m in self.mapping))
        object.__setattr__(self, "order", tuple(tuple(int(t) for t in o) for o in self.order))

    @classmethod
    def from_mapping(cls, g: TaskGraph, mapping: Sequence[int], n_machines: int) -> "Schedule":
        """Build a schedule whose per-machine order follows the graph's topological order."""
        mapping = [int(m) for m in mapping]
        if len(mapping) != g.n_tasks:
            raise ScheduleError(f"mapping covers {len(mapping)} of {g.n_tasks} tasks")
        order: list[list[int]] = [[] for _ in range(n_machines)]
        for t in topological_order(g):
            if not 0 <= mapping[t] < n_machines:
                raise ScheduleError(f"task {t} mapped to unknown machine {mapping[t]}")
            order[mapping[t]].append(t)
        return cls(tuple(mapping), tuple(tuple(o) for o in order))

    @property
    def n_machines(self) -> int:
        return len(self.order)

    def to_dict(self) -> dict:
        return {
            "mapping": [{"task": t, "machine": m} for t, m in enumerate(self.mapping)],
            "order": [list(o) for o in self.order],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "Schedule":
        try:
            pairs = sorted((int(e["task"]), int(e["machine"])) for e in obj["mapping"])
            order = obj["order"]
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed schedule: missing field {exc}") from None
        tasks = [t for t, _ in pairs]
        if tasks != list(range(len(tasks))):
            raise ScheduleError("schedule mapping must list each task id 0..N-1 exactly once")
        return cls(tuple(m for _, m in pairs), tuple(tuple(o) for o in order))

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_json(cls, text: str) -> "Schedule":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid JSON at line {exc.lineno} col {exc.colno}: {exc.msg}") from None
        return cls.from_dict(obj)


def check_mapping(g: TaskGraph, net: ComputeNetwork, s: Schedule) -> None:
    if len(s.mapping) != g.n_tasks:
        raise ScheduleError(f"mapping covers {len(s.mapping)} of {g.n_tasks} tasks")
    for t, m in enumerate(s.mapping):
        if not 0 <= m < net.n_machines:
            raise ScheduleError(f"task {t} mapped to unknown machine {m}")


def check_schedule(g: TaskGraph, net: ComputeNetwork, s: Schedule) -> None:
    """Raise unless ``s`` is a total mapping with orders consistent with it and with ``g``."""
    check_mapping(g, net, s)
    if len(s.order) != net.n_machines:
        raise ScheduleError(f"schedule has {len(s.order)} order lists for {net.n_machines} machines")
    position = {}
    for m, lst in enumerate(s.order):
        for k, t in enumerate(lst):
            if not 0 <= t < g.n_tasks or t in position:
                raise ScheduleError(f"order list of machine {m} has unknown or repeated task {t}")
            if s.mapping[t] != m:
                raise ScheduleError(f"task {t} is ordered on machine {m} but mapped to {s.mapping[t]}")
            position[t] = k
    if len(position) != g.n_tasks:
        raise ScheduleError("order lists do not cover every task")
    for a, b, _ in g.edges():
        if s.mapping[a] == s.mapping[b] and position[a] > position[b]:
            raise ScheduleError(f"order on machine {s.mapping[a]} runs task {b} before its predecessor {a}")


# -- makespan ------------------------------------------------------------


@dataclass(frozen=True)
class MakespanReport:
    ast: tuple[float, ...]
    aft: tuple[float, ...]
    intervals: tuple[tuple[tuple[int, float, float], ...], ...]  # per machine: (task, start, finish)
    makespan: float

    @property
    def feasible(self) -> bool:
        return math.isfinite(self.makespan)

    def to_dict(self) -> dict:
        return {
            "makespan": _num(self.makespan),
            "ast": [_num(x) for x in self.ast],
            "aft": [_num(x) for x in self.aft],
            "intervals": [[[t, _num(a), _num(b)] for t, a, b in m] for m in self.intervals],
        }


def _num(x: float):
    return x if math.isfinite(x) else "inf"


def simulate_makespan(g: TaskGraph, net: ComputeNetwork, s: Schedule) -> MakespanReport:
    """Replay ``s``: each machine runs its order list back to back, waiting for inputs.

    A task starts at the later of its machine becoming free and the arrival of
    its last input; the makespan is the latest finish over all tasks.
    """
    check_schedule(g, net, s)
    n = g.n_tasks
    mapping = s.mapping
    speeds = net.speeds.tolist()
    compute = g.compute.tolist()
    preds = g.predecessors
    in_edges = g.in_edges
    data = g.data.tolist()

    # successor of each task along its machine's order list
    next_on_machine = [-1] * n
    waiting = [len(preds[t]) for t in range(n)]
    for lst in s.order:
        for a, b in zip(lst, lst[1:]):
            next_on_machine[a] = b
            waiting[b] += 1

    ast = [0.0] * n
    aft = [0.0] * n
    avail = [0.0] * net.n_machines
    ready = deque(t for t in range(n) if waiting[t] == 0)
    done = 0
    while ready:
        t = ready.popleft()
        m = mapping[t]
        start = avail[m]
        for p, k in zip(preds[t], in_edges[t]):
            arrival = aft[p] + net.comm_time(data[k], mapping[p], m)
            if arrival > start:
                start = arrival
        ast[t] = start
        aft[t] = start + compute[t] / speeds[m]
        avail[m] = aft[t]
        done += 1
        for v in g.successors[t]:
            waiting[v] -= 1
            if waiting[v] == 0:
                ready.append(v)
        v = next_on_machine[t]
        if v >= 0:
            waiting[v] -= 1
            if waiting[v] == 0:
                ready.append(v)
    if done != n:
        raise InfeasibleOrderError("machine order lists deadlock against task dependencies")

    intervals = tuple(tuple((t, ast[t], aft[t]) for t in lst) for lst in s.order)
    makespan = max(aft) if n else 0.0
    return MakespanReport(tuple(ast), tuple(aft), intervals, makespan)


def makespan(g: TaskGraph, net: ComputeNetwork, s: Schedule) -> float:
    return simulate_makespan(g, net, s).makespan


# -- throughput ----------------------------------------------------------


@dataclass(frozen=True)
class ThroughputReport:
    t_comp: np.ndarray
    t_out: np.ndarray
    t_in: np.ndarray
    t_link: np.ndarray  # t_link[q, r], zero on the diagonal
    traffic: np.ndarray
    tau: float

    @property
    def throughput(self) -> float:
        if self.tau == INF:
            return 0.0
        return 1.0 / self.tau

    @property
    def feasible(self) -> bool:
        return math.isfinite(self.tau)

    def to_dict(self) -> dict:
        def arr(a):
            return [_num(x) for x in a.tolist()]

        return {
            "tau": _num(self.tau),
            "throughput": self.throughput,
            "t_comp": arr(self.t_comp),
            "t_out": arr(self.t_out),
            "t_in": arr(self.t_in),
            "t_link": [arr(row) for row in self.t_link],
            "traffic": self.traffic.tolist(),
        }


def machine_traffic(g: TaskGraph, net: ComputeNetwork, s: Schedule) -> np.ndarray:
    """Data volume sent from machine q to machine r (q != r) per job input."""
    check_mapping(g, net, s)
    nc = net.n_machines
    m = np.asarray(s.mapping, dtype=np.int64)
    traffic = np.zeros((nc, nc))
    if g.n_edges:
        mq, mr = m[g.src], m[g.dst]
        cross = mq != mr
        np.add.at(traffic, (mq[cross], mr[cross]), g.data[cross])
    return traffic


def throughput_terms(traffic: np.ndarray, load: np.ndarray, net: ComputeNetwork):
    """Bottleneck terms from per-machine compute load and the traffic matrix."""
    t_comp = load / net.speeds
    t_out = traffic.sum(axis=1) / net.bw_out
    t_in = traffic.sum(axis=0) / net.bw_in
    t_link = np.zeros_like(traffic)
    moving = traffic > 0
    np.fill_diagonal(moving, False)
    bw = net.bandwidth
    connected = moving & (bw > 0)
    t_link[connected] = traffic[connected] / bw[connected]
    t_link[moving & ~connected] = INF
    tau = float(max(t_comp.max(), t_out.max(), t_in.max(), t_link.max()))
    return t_comp, t_out, t_in, t_link, tau


def evaluate_throughput(g: TaskGraph, net: ComputeNetwork, s: Schedule) -> ThroughputReport:
    """Steady-state period ``tau`` of a mapping; the order lists are ignored."""
    traffic = machine_traffic(g, net, s)
    m = np.asarray(s.mapping, dtype=np.int64)
    load = np.bincount(m, weights=g.compute, minlength=net.n_machines)
    t_comp, t_out, t_in, t_link, tau = throughput_terms(traffic, load, net)
    return ThroughputReport(t_comp, t_out, t_in, t_link, traffic, tau)


def throughput(g: TaskGraph, net: ComputeNetwork, s: Schedule) -> float:
    return evaluate_throughput(g, net, s).throughput
