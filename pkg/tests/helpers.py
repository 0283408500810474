import numpy as np

from dagsched import build_input_graph, heft, label_with_teacher
from dagsched.edgnn import backward, model_forward
from dagsched.edgnn.model import loss

from .conftest import random_instance


def labeled_instance(rng, max_tasks=10, max_machines=3, min_machines=2):
    while True:
        g, net = random_instance(rng, max_tasks, max_machines)
        if net.n_machines >= min_machines:
            break
    ig = build_input_graph(g, net)
    labels = rng.integers(0, net.n_machines, size=g.n_tasks)
    from dagsched import Schedule

    return g, net, label_with_teacher(ig, Schedule.from_mapping(g, labels.tolist(), net.n_machines))


def teacher_instance(rng, max_tasks=10, max_machines=3):
    g, net = random_instance(rng, max_tasks, max_machines)
    return label_with_teacher(build_input_graph(g, net), heft(g, net))


def objective(model, ig, gs=None):
    nl, el = model_forward(model, ig, gs)
    return loss(nl, el, ig.node_labels, ig.edge_labels, model.lam)


def gradient_errors(model, ig, h=1e-5):
    """Per-parameter relative error between analytic and central-difference gradients."""
    gs = model.structure(ig)
    _, grads = backward(model, ig, gs)
    errors = {}
    for name, w in model.params.items():
        num = np.zeros_like(w)
        flat, nflat = w.reshape(-1), num.reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + h
            up = objective(model, ig, gs)
            flat[i] = old - h
            down = objective(model, ig, gs)
            flat[i] = old
            nflat[i] = (up - down) / (2 * h)
        a = grads[name]
        scale = max(np.linalg.norm(a), np.linalg.norm(num))
        errors[name] = 0.0 if scale < 1e-10 else float(np.linalg.norm(a - num) / scale)
    return errors
