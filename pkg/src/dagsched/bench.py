"""Dataset construction and benchmark runs comparing GCN, teacher and random schedulers.

Output directory layout written by :func:`run_benchmark`::

    out_dir/
      network.json            shared compute network
      graphs/<instance>.json  every benchmark task graph
      schedules/<instance>__<scheduler>.json
      results.csv             one row per (scheduler, instance)
      summary.csv             mean/stddev per (scheduler, family, size)
      metric.png, time.png    static plots
"""

from __future__ import annotations

import csv
import json
import logging
import math
import signal
import threading
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .edgnn.train import TrainConfig
from .errors import ValidationError
from .evaluator import Schedule, evaluate_throughput, simulate_makespan
from .featurize import LabeledInputGraph, build_input_graph, label_with_teacher
from .heuristics import heft, random_schedule, tp_heft
from .network import ComputeNetwork, generate_network
from .taskgraph import EdgeProbability, GenSpec, TaskGraph, WidthDepth, generate

log = logging.getLogger(__name__)

CSV_FIELDS = ["scheduler", "objective", "n_tasks", "ep_or_wd", "seed", "metric_value", "feasible", "sched_time_ms"]
TEACHERS = {"heft": heft, "tpheft": tp_heft}
OBJECTIVE_TEACHER = {"makespan": "heft", "throughput": "tpheft"}
# min-max features and a larger step: raw sum-aggregated features diverge at lr 1e-3
TRACK_TRAIN = {"lr": 3e-3, "normalize": True, "epochs": 250, "patience": 60}


class TeacherTimeout(Exception):
    pass


@dataclass
class ExperimentConfig:
    """One benchmark track.

    ``graphs`` lists graph families, each either ``{"ep": p, "n_tasks": [..]}``
    or ``{"width": w, "depth": d}``. Dataset graph ``i`` uses seed
    ``dataset_seed + i``; benchmark instances use the ``seeds`` list.
    """

    objective: str = "makespan"
    graphs: list[dict] = field(default_factory=lambda: [{"ep": 0.25, "n_tasks": [20, 30, 40, 50]}])
    bench_graphs: list[dict] | None = None
    network: dict = field(default_factory=lambda: {"n_machines": 4, "seed": 0})
    teacher: str | None = None
    dataset_size: int = 400
    dataset_seed: int = 0
    seeds: list[int] = field(default_factory=lambda: list(range(1_000_000, 1_000_030)))
    schedulers: list[str] | None = None
    compute_range: tuple[float, float] = (10.0, 100.0)
    data_value: float = 20.0
    teacher_timeout_s: float | None = None
    train: dict = field(default_factory=dict)
    out_dir: str | None = None
    jobs: int = 1

    def __post_init__(self):
        if self.objective not in OBJECTIVE_TEACHER:
            raise ValidationError(f"objective must be makespan or throughput, got {self.objective!r}")
        if self.teacher is None:
            self.teacher = OBJECTIVE_TEACHER[self.objective]
        if self.teacher not in TEACHERS:
            raise ValidationError(f"unknown teacher {self.teacher!r}")
        if self.schedulers is None:
            self.schedulers = ["gcn", self.teacher, "random"]
        self.compute_range = tuple(self.compute_range)
        for fam in self.graphs + (self.bench_graphs or []):
            _family_label(fam)

    @classmethod
    def makespan_track(cls, **kw) -> "ExperimentConfig":
        """Medium graphs of at most 50 tasks, EP 0.25 or 5 wide by 10 deep, HEFT teacher."""
        kw.setdefault("graphs", [{"ep": 0.25, "n_tasks": [20, 30, 40, 50]}, {"width": 5, "depth": 10}])
        kw.setdefault("bench_graphs", [{"ep": 0.25, "n_tasks": [20, 30, 40, 50]}])
        kw.setdefault("train", dict(TRACK_TRAIN))
        return cls(objective="makespan", **kw)

    @classmethod
    def throughput_track(cls, **kw) -> "ExperimentConfig":
        """Graphs 5 wide by 8 deep (40 tasks), TP-HEFT teacher."""
        kw.setdefault("graphs", [{"width": 5, "depth": 8}])
        kw.setdefault("train", dict(TRACK_TRAIN))
        return cls(objective="throughput", **kw)

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        try:
            return cls(**obj)
        except TypeError as exc:
            raise ValidationError(f"bad experiment config: {exc}") from None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["compute_range"] = list(self.compute_range)
        return d

    def train_config(self, **overrides) -> TrainConfig:
        opts = {**self.train, **overrides}
        if "splits" in opts:
            opts["splits"] = tuple(opts["splits"])
        try:
            return TrainConfig(**opts)
        except TypeError as exc:
            raise ValidationError(f"bad train options: {exc}") from None

    def make_network(self) -> ComputeNetwork:
        return generate_network(**self.network)

    def gen_specs(self, families: Sequence[dict], seeds: Sequence[int]) -> list[GenSpec]:
        out = []
        for k, seed in enumerate(seeds):
            fam = families[k % len(families)]
            out.append(self._spec(fam, seed, pick=k // len(families)))
        return out

    def bench_specs(self) -> list[GenSpec]:
        """Every (family, size, seed) benchmark instance."""
        out = []
        for fam in self.bench_graphs or self.graphs:
            sizes = fam.get("n_tasks", [None])
            sizes = sizes if isinstance(sizes, list) else [sizes]
            for i in range(len(sizes)):
                for seed in self.seeds:
                    out.append(self._spec(fam, seed, pick=i))
        return out

    def _spec(self, fam: dict, seed: int, pick: int) -> GenSpec:
        if "ep" in fam:
            sizes = fam["n_tasks"] if isinstance(fam["n_tasks"], list) else [fam["n_tasks"]]
            method = EdgeProbability(int(sizes[pick % len(sizes)]), float(fam["ep"]))
        else:
            method = WidthDepth(int(fam["width"]), int(fam["depth"]))
        return GenSpec(method, self.compute_range, self.data_value, int(seed))


def _family_label(fam: dict) -> str:
    if "ep" in fam and "n_tasks" in fam:
        return f"ep={fam['ep']}"
    if "width" in fam and "depth" in fam:
        return f"wd={fam['width']}x{fam['depth']}"
    raise ValidationError(f"graph family needs ep+n_tasks or width+depth: {fam}")


def spec_label(spec: GenSpec) -> str:
    m = spec.method
    if isinstance(m, EdgeProbability):
        return f"ep={m.ep}"
    return f"wd={m.width}x{m.depth}"


# -- dataset ---------------------------------------------------------------


@dataclass
class Dataset:
    records: list[LabeledInputGraph]
    network: ComputeNetwork
    teacher: str
    teacher_time_s: list[float]
    skipped: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "teacher": self.teacher,
            "network": self.network.to_dict(),
            "teacher_time_s": self.teacher_time_s,
            "skipped": self.skipped,
            "records": [r.to_dict() for r in self.records],
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "Dataset":
        try:
            obj = json.loads(Path(path).read_text())
            return cls(
                [LabeledInputGraph.from_dict(r) for r in obj["records"]],
                ComputeNetwork.from_dict(obj["network"]),
                obj["teacher"],
                list(obj.get("teacher_time_s", [])),
                list(obj.get("skipped", [])),
            )
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
        except KeyError as exc:
            raise ValidationError(f"{path}: missing field {exc}") from None


def _with_timeout(fn, timeout_s: float | None, *args):
    if not timeout_s or threading.current_thread() is not threading.main_thread():
        return fn(*args)

    def _raise(signum, frame):
        raise TeacherTimeout()

    old = signal.signal(signal.SIGALRM, _raise)
    signal.setitimer(signal.ITIMER_REAL, timeout_s)
    try:
        return fn(*args)
    finally:
        signal.setitimer(signal.ITIMER_REAL, 0)
        signal.signal(signal.SIGALRM, old)


def build_dataset(cfg: ExperimentConfig) -> Dataset:
    """Generate graphs, label them with the teacher on one shared network, featurize."""
    net = cfg.make_network()
    teacher = TEACHERS[cfg.teacher]
    seeds = [cfg.dataset_seed + i for i in range(cfg.dataset_size)]
    records, times, skipped = [], [], []
    for i, spec in enumerate(cfg.gen_specs(cfg.graphs, seeds)):
        g = generate(spec)
        t0 = time.perf_counter()
        try:
            sched = _with_timeout(teacher, cfg.teacher_timeout_s, g, net)
        except TeacherTimeout:
            log.warning("teacher %s timed out on dataset graph %d; skipped", cfg.teacher, i)
            skipped.append(i)
            continue
        times.append(time.perf_counter() - t0)
        records.append(label_with_teacher(build_input_graph(g, net), sched))
    ds = Dataset(records, net, cfg.teacher, times, skipped)
    if cfg.out_dir:
        Path(cfg.out_dir).mkdir(parents=True, exist_ok=True)
        ds.save(Path(cfg.out_dir) / "dataset.json")
    return ds


# -- benchmark -------------------------------------------------------------


def evaluate_metric(objective: str, g: TaskGraph, net: ComputeNetwork, s: Schedule) -> tuple[float, bool]:
    if objective == "makespan":
        v = simulate_makespan(g, net, s).makespan
        return v, math.isfinite(v)
    rep = evaluate_throughput(g, net, s)
    return rep.throughput, rep.feasible


def schedule_with(name: str, g: TaskGraph, net: ComputeNetwork, seed: int, model=None) -> tuple[Schedule, float, float]:
    """Run one scheduler; returns (schedule, scheduling ms, featurization ms)."""
    from .edgnn import infer_schedule

    feat_ms = 0.0
    if name == "gcn":
        if model is None:
            raise ValidationError("the gcn scheduler needs a trained model")
        t0 = time.perf_counter()
        ig = build_input_graph(g, net)
        feat_ms = (time.perf_counter() - t0) * 1e3
        t0 = time.perf_counter()
        s = infer_schedule(model, ig)
    elif name == "random":
        t0 = time.perf_counter()
        s = random_schedule(g, net, seed)
    elif name in TEACHERS:
        t0 = time.perf_counter()
        s = TEACHERS[name](g, net)
    else:
        raise ValidationError(f"unknown scheduler {name!r}")
    return s, (time.perf_counter() - t0) * 1e3, feat_ms


@dataclass
class BenchReport:
    rows: list[dict]
    summary: list[dict]
    artifacts: dict[str, str] = field(default_factory=dict)

    def mean_metric(self, scheduler: str) -> float:
        vals = [r["metric_value"] for r in self.rows if r["scheduler"] == scheduler]
        return float(np.mean(vals)) if vals else float("nan")

    def infeasible(self, scheduler: str) -> int:
        return sum(1 for r in self.rows if r["scheduler"] == scheduler and not r["feasible"])


def _run_instance(args) -> list[dict]:
    cfg, spec, net, model, idx = args
    g = generate(spec)
    out = []
    for name in cfg.schedulers:
        s, ms, feat_ms = schedule_with(name, g, net, spec.seed, model)
        value, feasible = evaluate_metric(cfg.objective, g, net, s)
        out.append({
            "scheduler": name,
            "objective": cfg.objective,
            "n_tasks": g.n_tasks,
            "ep_or_wd": spec_label(spec),
            "seed": spec.seed,
            "metric_value": value,
            "feasible": feasible,
            "sched_time_ms": ms,
            "feat_time_ms": feat_ms,
            "instance": f"i{idx:05d}",
            "_graph": g,
            "_schedule": s,
        })
    return out


def run_benchmark(cfg: ExperimentConfig, model=None, specs: Sequence[GenSpec] | None = None) -> BenchReport:
    """Schedule every benchmark instance with every configured scheduler and evaluate it."""
    if "gcn" in cfg.schedulers and model is None:
        raise ValidationError("the gcn scheduler needs a trained model")
    net = cfg.make_network()
    if model is not None:
        model_nc = model.n_machines
        if model_nc != net.n_machines:
            from .errors import IncompatibleModelError

            raise IncompatibleModelError(f"model expects {model_nc} machines, network has {net.n_machines}")
    specs = list(specs) if specs is not None else cfg.bench_specs()
    jobs = [(cfg, spec, net, model, i) for i, spec in enumerate(specs)]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(cfg.jobs) as ex:
            chunks = list(ex.map(_run_instance, jobs))
    else:
        chunks = [_run_instance(j) for j in jobs]
    rows = [r for c in chunks for r in c]
    report = BenchReport(rows, summarize(rows))
    if cfg.out_dir:
        report.artifacts = write_artifacts(Path(cfg.out_dir), net, rows, report.summary, cfg.objective)
    for r in rows:
        r.pop("_graph")
        r.pop("_schedule")
    return report


def summarize(rows: Sequence[dict]) -> list[dict]:
    """Mean/stddev of the metric over feasible rows, per (scheduler, family, size)."""
    groups: dict[tuple, list[dict]] = {}
    for r in rows:
        groups.setdefault((r["scheduler"], r["ep_or_wd"], r["n_tasks"]), []).append(r)
    out = []
    for (name, fam, n), rs in sorted(groups.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2])):
        vals = np.array([r["metric_value"] for r in rs if r["feasible"]])
        times = np.array([r["sched_time_ms"] for r in rs])
        out.append({
            "scheduler": name,
            "ep_or_wd": fam,
            "n_tasks": n,
            "count": len(rs),
            "infeasible": sum(not r["feasible"] for r in rs),
            "mean": float(vals.mean()) if len(vals) else float("nan"),
            "std": float(vals.std()) if len(vals) else float("nan"),
            "mean_sched_time_ms": float(times.mean()),
        })
    return out


def write_artifacts(out: Path, net: ComputeNetwork, rows, summary, objective: str) -> dict[str, str]:
    (out / "graphs").mkdir(parents=True, exist_ok=True)
    (out / "schedules").mkdir(parents=True, exist_ok=True)
    (out / "network.json").write_text(net.to_json())
    for r in rows:
        gpath = out / "graphs" / f"{r['instance']}.json"
        if not gpath.exists():
            gpath.write_text(r["_graph"].to_json())
        spath = out / "schedules" / f"{r['instance']}__{r['scheduler']}.json"
        spath.write_text(r["_schedule"].to_json())
        r["schedule_path"] = str(spath.relative_to(out))
        r["graph_path"] = str(gpath.relative_to(out))
    with open(out / "results.csv", "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=CSV_FIELDS + ["instance"], extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow({**r, "metric_value": repr(r["metric_value"]), "sched_time_ms": f"{r['sched_time_ms']:.4f}"})
    with open(out / "summary.csv", "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=list(summary[0].keys()) if summary else ["scheduler"])
        w.writeheader()
        w.writerows(summary)
    artifacts = {"results": str(out / "results.csv"), "summary": str(out / "summary.csv")}
    artifacts.update(_plots(out, summary, objective))
    return artifacts


def _plots(out: Path, summary, objective: str) -> dict[str, str]:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    paths = {}
    for key, ylabel, fname in (("mean", objective, "metric.png"), ("mean_sched_time_ms", "scheduling time (ms)", "time.png")):
        fig, ax = plt.subplots(figsize=(6, 4))
        for name in sorted({s["scheduler"] for s in summary}):
            pts = sorted((s["n_tasks"], s[key]) for s in summary if s["scheduler"] == name)
            ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=name)
        ax.set_xlabel("number of tasks")
        ax.set_ylabel(ylabel)
        if key != "mean":
            ax.set_yscale("log")
        ax.legend()
        fig.tight_layout()
        fig.savefig(out / fname)
        plt.close(fig)
        paths[fname] = str(out / fname)
    return paths


def recompute_results(out_dir) -> list[tuple[dict, float]]:
    """Re-evaluate every stored schedule; returns (csv row, recomputed value) pairs."""
    out = Path(out_dir)
    net = ComputeNetwork.from_json((out / "network.json").read_text())
    pairs = []
    with open(out / "results.csv") as f:
        for row in csv.DictReader(f):
            g = TaskGraph.from_json((out / "graphs" / f"{row['instance']}.json").read_text())
            s = Schedule.from_json((out / "schedules" / f"{row['instance']}__{row['scheduler']}.json").read_text())
            value, _ = evaluate_metric(row["objective"], g, net, s)
            pairs.append((row, value))
    return pairs
