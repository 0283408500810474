"""Teacher schedulers: HEFT (makespan), greedy TP-HEFT (throughput) and a random baseline.

Both teachers visit tasks by descending upward rank. HEFT places each task on
the machine giving the earliest finish time, filling idle gaps when the task
fits. TP-HEFT places each task on the machine giving the smallest steady-state
period over the tasks assigned so far. Ties go to the lowest machine index,
then the lowest task id.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .evaluator import Schedule, throughput_terms
from .network import INF, ComputeNetwork
from .taskgraph import TaskGraph, topological_order


def mean_inverse_bandwidth(net: ComputeNetwork) -> float:
    """Average of ``1/B[q, r]`` over connected pairs ``q != r`` (0 if there are none)."""
    bw = net.bandwidth
    mask = ~np.eye(net.n_machines, dtype=bool) & (bw > 0)
    if not mask.any():
        return 0.0
    return float(np.mean(1.0 / bw[mask]))


def upward_rank(g: TaskGraph, net: ComputeNetwork) -> np.ndarray:
    """HEFT priority: mean compute cost plus the costliest path to an exit task."""
    mean_cost = g.compute * float(np.mean(1.0 / net.speeds))
    inv_bw = mean_inverse_bandwidth(net)
    data = g.data.tolist()
    rank = np.zeros(g.n_tasks)
    for t in reversed(topological_order(g)):
        tail = 0.0
        for k, v in zip(g.out_edges[t], g.successors[t]):
            c = data[k] * inv_bw + rank[v]
            if c > tail:
                tail = c
        rank[t] = mean_cost[t] + tail
    return rank


def priority_order(g: TaskGraph, rank: np.ndarray) -> list[int]:
    """Ready-list traversal by descending rank (ties by id); always topological."""
    waiting = [len(p) for p in g.predecessors]
    heap = [(-rank[t], t) for t in range(g.n_tasks) if waiting[t] == 0]
    heapq.heapify(heap)
    out = []
    while heap:
        _, t = heapq.heappop(heap)
        out.append(t)
        for v in g.successors[t]:
            waiting[v] -= 1
            if waiting[v] == 0:
                heapq.heappush(heap, (-rank[v], v))
    return out


@dataclass(frozen=True)
class HeftResult:
    schedule: Schedule
    ast: tuple[float, ...]
    aft: tuple[float, ...]
    makespan: float


def heft_plan(g: TaskGraph, net: ComputeNetwork) -> HeftResult:
    """Run insertion-based HEFT and return the schedule with its internal timings."""
    n, nc = g.n_tasks, net.n_machines
    compute = g.compute.tolist()
    speeds = net.speeds.tolist()
    data = g.data.tolist()
    rank = upward_rank(g, net)

    mapping = [-1] * n
    ast = [0.0] * n
    aft = [0.0] * n
    # per machine: sorted (start, finish, task); infinite starts are kept at the end
    timeline: list[list[tuple[float, float, int]]] = [[] for _ in range(nc)]

    for t in priority_order(g, rank):
        best = None
        for j in range(nc):
            ready = 0.0
            for p, k in zip(g.predecessors[t], g.in_edges[t]):
                arrival = aft[p] + net.comm_time(data[k], mapping[p], j)
                if arrival > ready:
                    ready = arrival
            start, slot = _earliest_slot(timeline[j], ready, compute[t] / speeds[j])
            finish = start + compute[t] / speeds[j]
            if best is None or finish < best[0]:
                best = (finish, start, j, slot)
        finish, start, j, slot = best
        mapping[t] = j
        ast[t] = start
        aft[t] = finish
        timeline[j].insert(slot, (start, finish, t))

    order = tuple(tuple(t for _, _, t in tl) for tl in timeline)
    sched = Schedule(tuple(mapping), order)
    return HeftResult(sched, tuple(ast), tuple(aft), max(aft) if n else 0.0)


def _earliest_slot(tl: list[tuple[float, float, int]], ready: float, dur: float) -> tuple[float, int]:
    """Earliest start >= ready where ``dur`` fits; returns (start, insert position)."""
    prev_finish = 0.0
    for pos, (s, f, _) in enumerate(tl):
        cand = prev_finish if prev_finish > ready else ready
        fin = cand + dur
        if fin != INF and fin <= s:
            return cand, pos
        prev_finish = f
    cand = prev_finish if prev_finish > ready else ready
    return cand, len(tl)


def heft(g: TaskGraph, net: ComputeNetwork) -> Schedule:
    return heft_plan(g, net).schedule


def tp_heft(g: TaskGraph, net: ComputeNetwork) -> Schedule:
    """Greedy throughput scheduler minimising the partial-assignment period."""
    nc = net.n_machines
    rank = upward_rank(g, net)
    order = priority_order(g, rank)
    mapping = [-1] * g.n_tasks
    load = np.zeros(nc)
    traffic = np.zeros((nc, nc))
    compute = g.compute.tolist()
    data = g.data.tolist()

    for t in order:
        best_tau, best_j = INF, 0
        first = True
        for j in range(nc):
            trial_load = load.copy()
            trial_load[j] += compute[t]
            trial = traffic.copy()
            for p, k in zip(g.predecessors[t], g.in_edges[t]):
                q = mapping[p]
                if q != j:
                    trial[q, j] += data[k]
            tau = throughput_terms(trial, trial_load, net)[-1]
            if first or tau < best_tau:
                best_tau, best_j, first = tau, j, False
        mapping[t] = best_j
        load[best_j] += compute[t]
        for p, k in zip(g.predecessors[t], g.in_edges[t]):
            q = mapping[p]
            if q != best_j:
                traffic[q, best_j] += data[k]

    lists: list[list[int]] = [[] for _ in range(nc)]
    for t in order:
        lists[mapping[t]].append(t)
    return Schedule(tuple(mapping), tuple(tuple(x) for x in lists))


def random_schedule(g: TaskGraph, net: ComputeNetwork, seed: int = 0) -> Schedule:
    """Uniform random machine per task; per-machine order follows the topological order."""
    rng = np.random.default_rng(int(seed) & 0xFFFFFFFFFFFFFFFF)
    mapping = rng.integers(0, net.n_machines, size=g.n_tasks)
    return Schedule.from_mapping(g, mapping.tolist(), net.n_machines)


SCHEDULERS = {"heft": heft, "tpheft": tp_heft}
