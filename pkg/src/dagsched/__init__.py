"""Scheduling toolkit for task graphs on heterogeneous compute networks."""

from .evaluator import Schedule, evaluate_throughput, machine_traffic, simulate_makespan
from .featurize import LabeledInputGraph, build_input_graph, label_with_teacher
from .heuristics import heft, random_schedule, tp_heft, upward_rank
from .network import ComputeNetwork, comm_time, generate_network
from .taskgraph import (
    EdgeProbability,
    GenSpec,
    TaskGraph,
    WidthDepth,
    disjoint_union,
    generate_ep,
    generate_layered,
    topological_order,
    validate,
)

__all__ = [
    "ComputeNetwork", "EdgeProbability", "GenSpec", "LabeledInputGraph", "Schedule", "TaskGraph", "WidthDepth",
    "build_input_graph", "comm_time", "disjoint_union", "evaluate_throughput", "generate_ep", "generate_layered",
    "generate_network", "heft", "label_with_teacher", "machine_traffic", "random_schedule", "simulate_makespan",
    "topological_order", "tp_heft", "upward_rank", "validate",
]

__version__ = "0.1.0"
