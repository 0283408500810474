import json
import subprocess
import sys
import time

import pytest

from dagsched import ComputeNetwork, Schedule, TaskGraph, generate_network, heft, simulate_makespan, tp_heft
from dagsched.cli import main
from dagsched.evaluator import evaluate_throughput
from dagsched.taskgraph import EdgeProbability, GenSpec, generate


@pytest.fixture
def files(tmp_path):
    assert main(["gen-graph", "--ep", "0.3", "--n-tasks", "15", "--seed", "4", "-o", str(tmp_path / "g.json")]) == 0
    assert main(["gen-network", "--machines", "3", "--seed", "2", "-o", str(tmp_path / "n.json")]) == 0
    return tmp_path


def test_gen_matches_library(files):
    g = TaskGraph.from_json((files / "g.json").read_text())
    assert g == generate(GenSpec(EdgeProbability(15, 0.3), seed=4))
    assert ComputeNetwork.from_json((files / "n.json").read_text()) == generate_network(3, seed=2)


def test_gen_graph_layered(tmp_path):
    assert main(["gen-graph", "--width", "5", "--depth", "8", "-o", str(tmp_path / "g.json")]) == 0
    assert TaskGraph.from_json((tmp_path / "g.json").read_text()).n_tasks == 40


def test_random_schedule_repeatable(files):
    args = ["schedule", "--algo", "random", "--seed", "1", "--graph", str(files / "g.json"), "--network", str(files / "n.json")]
    assert main(args + ["-o", str(files / "a.json")]) == 0
    assert main(args + ["-o", str(files / "b.json")]) == 0
    assert (files / "a.json").read_text() == (files / "b.json").read_text()


def test_seed_env_fallback(files, monkeypatch):
    args = ["schedule", "--algo", "random", "--graph", str(files / "g.json"), "--network", str(files / "n.json")]
    monkeypatch.setenv("DAGSCHED_SEED", "1")
    assert main(args + ["-o", str(files / "env.json")]) == 0
    assert main(args + ["--seed", "1", "-o", str(files / "flag.json")]) == 0
    assert (files / "env.json").read_text() == (files / "flag.json").read_text()


@pytest.mark.parametrize("algo,metric", [("heft", "makespan"), ("tpheft", "throughput")])
def test_schedule_and_eval_match_library(files, capsys, algo, metric):
    g = TaskGraph.from_json((files / "g.json").read_text())
    net = ComputeNetwork.from_json((files / "n.json").read_text())
    assert main(["schedule", "--algo", algo, "--graph", str(files / "g.json"), "--network", str(files / "n.json"),
                 "-o", str(files / "s.json")]) == 0
    s = Schedule.from_json((files / "s.json").read_text())
    assert s == (heft(g, net) if algo == "heft" else tp_heft(g, net))
    capsys.readouterr()
    assert main(["eval", "--metric", metric, "--graph", str(files / "g.json"), "--network", str(files / "n.json"),
                 "--schedule", str(files / "s.json"), "--report", str(files / "r.json")]) == 0
    value = float(capsys.readouterr().out.strip())
    expected = simulate_makespan(g, net, s).makespan if metric == "makespan" else evaluate_throughput(g, net, s).throughput
    assert value == expected
    assert json.loads((files / "r.json").read_text())


def test_exit_codes(files, tmp_path):
    assert main(["gen-graph", "--bogus"]) == 2
    assert main([]) == 2
    (tmp_path / "bad.json").write_text('{"tasks": [}')
    assert main(["schedule", "--algo", "heft", "--graph", str(tmp_path / "bad.json"), "--network", str(files / "n.json")]) == 3
    assert main(["schedule", "--algo", "heft", "--graph", str(tmp_path / "missing.json"), "--network", str(files / "n.json")]) == 4
    assert main(["gen-graph", "--ep", "2.0", "--n-tasks", "3"]) == 3


def test_deadlock_exit_code(tmp_path):
    (tmp_path / "g.json").write_text(TaskGraph([1, 1, 1, 1], [(0, 1, 1), (2, 3, 1)]).to_json())
    (tmp_path / "n.json").write_text(ComputeNetwork([1, 1], [[0, 1], [1, 0]], [1, 1], [1, 1]).to_json())
    (tmp_path / "s.json").write_text(Schedule((0, 1, 1, 0), ((3, 0), (1, 2))).to_json())
    assert main(["eval", "--metric", "makespan", "--graph", str(tmp_path / "g.json"), "--network", str(tmp_path / "n.json"),
                 "--schedule", str(tmp_path / "s.json")]) == 5


def test_error_message_names_field(tmp_path, capsys):
    (tmp_path / "g.json").write_text(json.dumps({"tasks": [{"id": 0, "compute": 1}],
                                                 "edges": [{"src": 0, "dst": 3, "data": 1}]}))
    (tmp_path / "n.json").write_text(generate_network(2).to_json())
    assert main(["schedule", "--algo", "heft", "--graph", str(tmp_path / "g.json"), "--network", str(tmp_path / "n.json")]) == 3
    assert "3" in capsys.readouterr().err


def test_end_to_end_pipeline(tmp_path, capsys):
    t0 = time.perf_counter()
    cfg = {"track": "makespan", "dataset_size": 10, "seeds": [1, 2], "bench_graphs": [{"ep": 0.25, "n_tasks": [20]}],
           "train": {"epochs": 20, "hidden": 16, "n_layers": 2}}
    (tmp_path / "cfg.json").write_text(json.dumps(cfg))
    assert main(["build-dataset", "--config", str(tmp_path / "cfg.json"), "--out-dir", str(tmp_path / "ds")]) == 0
    assert main(["train", "--dataset", str(tmp_path / "ds" / "dataset.json"), "--config", str(tmp_path / "cfg.json"),
                 "--out", str(tmp_path / "m.ckpt"), "--report", str(tmp_path / "rep.json")]) == 0
    assert main(["gen-graph", "--ep", "0.25", "--n-tasks", "20", "-o", str(tmp_path / "g.json")]) == 0
    assert main(["gen-network", "--machines", "4", "-o", str(tmp_path / "n.json")]) == 0
    assert main(["schedule", "--algo", "gcn", "--model", str(tmp_path / "m.ckpt"), "--graph", str(tmp_path / "g.json"),
                 "--network", str(tmp_path / "n.json"), "-o", str(tmp_path / "s.json")]) == 0
    assert main(["eval", "--metric", "makespan", "--graph", str(tmp_path / "g.json"), "--network", str(tmp_path / "n.json"),
                 "--schedule", str(tmp_path / "s.json")]) == 0
    assert main(["bench", "--config", str(tmp_path / "cfg.json"), "--model", str(tmp_path / "m.ckpt"),
                 "--out-dir", str(tmp_path / "bench")]) == 0
    assert (tmp_path / "bench" / "results.csv").exists()
    assert len(json.loads((tmp_path / "rep.json").read_text())["train_loss"]) <= 20
    assert time.perf_counter() - t0 < 60
    # a model trained for 4 machines refuses a 3-machine network
    assert main(["gen-network", "--machines", "3", "-o", str(tmp_path / "n3.json")]) == 0
    assert main(["schedule", "--algo", "gcn", "--model", str(tmp_path / "m.ckpt"), "--graph", str(tmp_path / "g.json"),
                 "--network", str(tmp_path / "n3.json")]) == 6


def test_console_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "dagsched.cli", "gen-network", "--machines", "2", "--seed", "3"],
                         capture_output=True, text=True, check=True)
    assert ComputeNetwork.from_json(out.stdout) == generate_network(2, seed=3)
