import numpy as np
import pytest
from hypothesis import given

from dagsched import ComputeNetwork, Schedule, TaskGraph, build_input_graph, heft, label_with_teacher, tp_heft
from dagsched.errors import ScheduleError
from dagsched.featurize import (ZERO_BANDWIDTH_SENTINEL, LabeledInputGraph, MinMaxScaler, select_components,
                                union_inputs)
from dagsched.heuristics import random_schedule

from .conftest import instances, random_instance


def scalar_features(g, net, sentinel=ZERO_BANDWIDTH_SENTINEL):
    nc = net.n_machines
    nodes = [[float(g.compute[i]) / float(net.speeds[j]) for j in range(nc)] for i in range(g.n_tasks)]
    edges = []
    for _, _, d in g.edges():
        row = []
        for q in range(nc):
            for r in range(nc):
                b = float(net.bandwidth[q, r])
                if q == r or d == 0:
                    row.append(0.0)
                elif b > 0:
                    row.append(d / b)
                else:
                    row.append(sentinel)
        edges.append(row)
    return nodes, edges


def test_examples():
    net = ComputeNetwork([2, 3], [[0, 5], [5, 0]], [1, 1], [1, 1])
    ig = build_input_graph(TaskGraph([6, 1], [(0, 1, 10)]), net)
    assert ig.node_features[0].tolist() == [3.0, 2.0]
    assert ig.edge_features[0].tolist() == [0.0, 2.0, 2.0, 0.0]
    ig0 = build_input_graph(TaskGraph([6, 1], [(0, 1, 0)]), net)
    assert not ig0.edge_features.any()


def test_zero_bandwidth_sentinel():
    net = ComputeNetwork([1, 1], [[0, 0], [4, 0]], [1, 1], [1, 1])
    ig = build_input_graph(TaskGraph([1, 1], [(0, 1, 8)]), net)
    assert ig.edge_features[0].tolist() == [0.0, ZERO_BANDWIDTH_SENTINEL, 2.0, 0.0]
    assert build_input_graph(TaskGraph([1, 1], [(0, 1, 8)]), net, sentinel=7.0).edge_features[0, 1] == 7.0


def test_exactness_100_fuzzed():
    rng = np.random.default_rng(99)
    for _ in range(100):
        g, net = random_instance(rng, 12, 4, zero_bw=0.2)
        ig = build_input_graph(g, net)
        nodes, edges = scalar_features(g, net)
        assert ig.node_features.shape == (g.n_tasks, net.n_machines)
        assert ig.edge_features.shape == (g.n_edges, net.n_machines ** 2)
        assert ig.node_features.tolist() == nodes
        assert ig.edge_features.tolist() == edges


@given(instances(10, 4))
def test_scaling(inst):
    g, net = inst
    base = build_input_graph(g, net)
    fast = ComputeNetwork(net.speeds * 2, net.bandwidth, net.bw_out, net.bw_in)
    assert np.allclose(build_input_graph(g, fast).node_features, base.node_features / 2, rtol=1e-15)
    wide = ComputeNetwork(net.speeds, net.bandwidth * 2, net.bw_out, net.bw_in)
    assert np.allclose(build_input_graph(g, wide).edge_features, base.edge_features / 2, rtol=1e-15)


def test_labels():
    g = TaskGraph([1, 1, 1], [(0, 1, 1), (1, 2, 1), (0, 2, 1)])
    net = ComputeNetwork([1, 1, 1], np.ones((3, 3)), [1] * 3, [1] * 3)
    ig = build_input_graph(g, net)
    zero = label_with_teacher(ig, Schedule.from_mapping(g, [0, 0, 0], 3))
    assert not zero.node_labels.any() and not zero.edge_labels.any()
    lab = label_with_teacher(ig, Schedule.from_mapping(g, [2, 1, 0], 3))
    assert lab.edge_labels.tolist() == [2, 2, 1]
    again = label_with_teacher(lab, Schedule.from_mapping(g, [2, 1, 0], 3))
    assert np.array_equal(again.node_labels, lab.node_labels) and np.array_equal(again.edge_labels, lab.edge_labels)
    with pytest.raises(ScheduleError):
        label_with_teacher(ig, Schedule((0, 0), ((0, 1), (), ())))


@given(instances(10, 4))
def test_edge_label_consistency(inst):
    g, net = inst
    ig = build_input_graph(g, net)
    for s in (heft(g, net), tp_heft(g, net), random_schedule(g, net, 2)):
        lab = label_with_teacher(ig, s)
        assert np.array_equal(lab.edge_labels, lab.node_labels[g.src])
        assert lab.node_labels.tolist() == list(s.mapping)
        assert np.all((lab.node_labels >= 0) & (lab.node_labels < net.n_machines))


def test_union_and_select():
    rng = np.random.default_rng(3)
    net = random_instance(rng, 3, 3)[1]
    while net.n_machines != 3:
        net = random_instance(rng, 3, 3)[1]
    recs = []
    for _ in range(5):
        g = random_instance(rng, 8, 3)[0]
        recs.append(label_with_teacher(build_input_graph(g, net), heft(g, net)))
    u = union_inputs(recs)
    assert u.n_components == 5
    assert u.graph.n_tasks == sum(r.graph.n_tasks for r in recs)
    part = select_components(u, [1, 3])
    assert part.n_components == 2
    assert np.array_equal(part.node_features, np.concatenate([recs[1].node_features, recs[3].node_features]))
    assert np.array_equal(part.edge_labels, np.concatenate([recs[1].edge_labels, recs[3].edge_labels]))
    assert np.array_equal(part.edge_features, np.concatenate([recs[1].edge_features, recs[3].edge_features]))


def test_scaler_maps_to_unit_interval():
    rng = np.random.default_rng(4)
    g, net = random_instance(rng, 10, 3)
    ig = build_input_graph(g, net)
    sc = MinMaxScaler.fit([ig])
    out = sc.transform(ig)
    assert out.node_features.min() >= 0 and out.node_features.max() <= 1


def test_record_json_roundtrip():
    rng = np.random.default_rng(5)
    g, net = random_instance(rng, 10, 3, zero_bw=0.3)
    ig = label_with_teacher(build_input_graph(g, net), heft(g, net))
    back = LabeledInputGraph.from_json(ig.to_json())
    assert back.graph == ig.graph
    for f in ("node_features", "edge_features", "node_labels", "edge_labels", "component_id"):
        assert np.array_equal(getattr(back, f), getattr(ig, f))
    assert back.n_machines == ig.n_machines
