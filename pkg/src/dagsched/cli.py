"""Command-line entry point: ``dagsched <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import bench
from .edgnn import TrainConfig, infer_schedule, load_model, save_model, train
from .errors import CheckpointError, IncompatibleModelError, InfeasibleOrderError, ValidationError
from .evaluator import Schedule, evaluate_throughput, simulate_makespan
from .featurize import build_input_graph
from .heuristics import heft, random_schedule, tp_heft
from .network import ComputeNetwork, generate_network
from .taskgraph import EdgeProbability, GenSpec, TaskGraph, WidthDepth, generate

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_IO = 4
EXIT_INFEASIBLE = 5
EXIT_INCOMPATIBLE = 6


def _default_seed() -> int:
    return int(os.environ.get("DAGSCHED_SEED", "0"))


def _read(path: str) -> str:
    return Path(path).read_text()


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text + "\n")
    else:
        Path(path).write_text(text)


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        return json.loads(_read(path))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON at line {exc.lineno} col {exc.colno}: {exc.msg}") from None


def cmd_gen_graph(a) -> int:
    if a.ep is not None:
        if a.n_tasks is None:
            raise ValidationError("--ep needs --n-tasks")
        method = EdgeProbability(a.n_tasks, a.ep)
    elif a.width is not None and a.depth is not None:
        method = WidthDepth(a.width, a.depth)
    else:
        raise ValidationError("give either --ep/--n-tasks or --width/--depth")
    g = generate(GenSpec(method, tuple(a.compute_range), a.data, a.seed))
    _write(a.output, g.to_json())
    return EXIT_OK


def cmd_gen_network(a) -> int:
    net = generate_network(a.machines, tuple(a.speed_range), tuple(a.bw_range), tuple(a.cap_range),
                           a.seed, symmetric=not a.asymmetric)
    _write(a.output, net.to_json())
    return EXIT_OK


def cmd_schedule(a) -> int:
    g = TaskGraph.from_json(_read(a.graph))
    net = ComputeNetwork.from_json(_read(a.network))
    if a.algo == "heft":
        s = heft(g, net)
    elif a.algo == "tpheft":
        s = tp_heft(g, net)
    elif a.algo == "random":
        s = random_schedule(g, net, a.seed)
    else:
        if not a.model:
            raise ValidationError("--algo gcn needs --model")
        model = load_model(a.model, net.n_machines)
        s = infer_schedule(model, build_input_graph(g, net))
    _write(a.output, s.to_json())
    return EXIT_OK


def cmd_eval(a) -> int:
    g = TaskGraph.from_json(_read(a.graph))
    net = ComputeNetwork.from_json(_read(a.network))
    s = Schedule.from_json(_read(a.schedule))
    if a.metric == "makespan":
        rep = simulate_makespan(g, net, s)
        value = rep.makespan
    else:
        rep = evaluate_throughput(g, net, s)
        value = rep.throughput
    if a.report:
        Path(a.report).write_text(json.dumps(rep.to_dict()))
    print(repr(value))
    return EXIT_OK


def _experiment(a) -> bench.ExperimentConfig:
    obj = _load_config(a.config)
    track = obj.pop("track", None) or obj.pop("objective", None) or getattr(a, "track", None) or "makespan"
    if getattr(a, "out_dir", None):
        obj["out_dir"] = a.out_dir
    if getattr(a, "size", None):
        obj["dataset_size"] = a.size
    if getattr(a, "jobs", None):
        obj["jobs"] = a.jobs
    if a.seed_given:
        obj["dataset_seed"] = a.seed
    factory = bench.ExperimentConfig.makespan_track if track == "makespan" else bench.ExperimentConfig.throughput_track
    try:
        return factory(**obj)
    except TypeError as exc:
        raise ValidationError(f"bad experiment config: {exc}") from None


def cmd_build_dataset(a) -> int:
    cfg = _experiment(a)
    ds = bench.build_dataset(cfg)
    if not cfg.out_dir:
        _write("-", json.dumps(ds.to_dict()))
    else:
        print(str(Path(cfg.out_dir) / "dataset.json"))
    return EXIT_OK


def cmd_train(a) -> int:
    ds = bench.Dataset.load(a.dataset)
    opts = {}
    if a.epochs is not None:
        opts["epochs"] = a.epochs
    if a.seed_given:
        opts["seed"] = a.seed
    cfg = _experiment(a).train_config(**opts) if a.config else TrainConfig(**opts)
    model, report = train(ds.records, cfg)
    save_model(model, a.out)
    if a.report:
        Path(a.report).write_text(json.dumps(report.to_dict()))
    print(json.dumps({"test_node_acc": report.test_node_acc, "best_epoch": report.best_epoch,
                      "train_time_s": report.train_time_s}))
    return EXIT_OK


def cmd_bench(a) -> int:
    cfg = _experiment(a)
    model = load_model(a.model) if a.model else None
    if model is None and "gcn" in cfg.schedulers:
        cfg.schedulers = [s for s in cfg.schedulers if s != "gcn"]
    report = bench.run_benchmark(cfg, model)
    for row in report.summary:
        print(json.dumps(row))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dagsched", description="DAG scheduling on heterogeneous networks")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def seeded(sp):
        sp.add_argument("--seed", type=int, default=None, help="RNG seed (default: $DAGSCHED_SEED or 0)")
        return sp

    sp = seeded(sub.add_parser("gen-graph", help="generate a random task graph"))
    sp.add_argument("--ep", type=float)
    sp.add_argument("--n-tasks", type=int)
    sp.add_argument("--width", type=int)
    sp.add_argument("--depth", type=int)
    sp.add_argument("--compute-range", type=float, nargs=2, default=[10.0, 100.0])
    sp.add_argument("--data", type=float, default=20.0)
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_gen_graph)

    sp = seeded(sub.add_parser("gen-network", help="generate a random compute network"))
    sp.add_argument("--machines", type=int, required=True)
    sp.add_argument("--speed-range", type=float, nargs=2, default=[1.0, 10.0])
    sp.add_argument("--bw-range", type=float, nargs=2, default=[1.0, 10.0])
    sp.add_argument("--cap-range", type=float, nargs=2, default=[5.0, 50.0])
    sp.add_argument("--asymmetric", action="store_true")
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_gen_network)

    sp = seeded(sub.add_parser("schedule", help="schedule a task graph"))
    sp.add_argument("--algo", choices=["heft", "tpheft", "random", "gcn"], required=True)
    sp.add_argument("--graph", required=True)
    sp.add_argument("--network", required=True)
    sp.add_argument("--model")
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_schedule)

    sp = seeded(sub.add_parser("eval", help="evaluate a stored schedule"))
    sp.add_argument("--metric", choices=["makespan", "throughput"], required=True)
    sp.add_argument("--graph", required=True)
    sp.add_argument("--network", required=True)
    sp.add_argument("--schedule", required=True)
    sp.add_argument("--report", help="write the full per-term report as JSON")
    sp.set_defaults(func=cmd_eval)

    sp = seeded(sub.add_parser("build-dataset", help="teacher-labeled training dataset"))
    sp.add_argument("--config")
    sp.add_argument("--track", choices=["makespan", "throughput"])
    sp.add_argument("--size", type=int)
    sp.add_argument("--out-dir")
    sp.set_defaults(func=cmd_build_dataset)

    sp = seeded(sub.add_parser("train", help="train the GCN scheduler"))
    sp.add_argument("--dataset", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--config")
    sp.add_argument("--epochs", type=int)
    sp.add_argument("--report")
    sp.set_defaults(func=cmd_train)

    sp = seeded(sub.add_parser("bench", help="run a benchmark track"))
    sp.add_argument("--config")
    sp.add_argument("--track", choices=["makespan", "throughput"])
    sp.add_argument("--model")
    sp.add_argument("--out-dir")
    sp.add_argument("--jobs", type=int)
    sp.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    a.seed_given = a.seed is not None
    if a.seed is None:
        a.seed = _default_seed()
    try:
        return a.func(a)
    except InfeasibleOrderError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except IncompatibleModelError as exc:
        print(f"incompatible model: {exc}", file=sys.stderr)
        return EXIT_INCOMPATIBLE
    except (ValidationError, CheckpointError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
