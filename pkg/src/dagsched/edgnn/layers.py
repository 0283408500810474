"""Message-passing layers with hand-written reverse passes.

Embeddings are row-major: ``h_node`` is ``(n_nodes, dim)``, ``h_edge`` is
``(n_edges, dim)`` and weights map ``(dim_in, dim_out)``, so a layer computes
``h @ W``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

AGGREGATIONS = ("sum", "mean")


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def _row_normalize(m: sp.csr_matrix) -> sp.csr_matrix:
    deg = np.asarray(m.sum(axis=1)).ravel()
    scale = np.divide(1.0, deg, out=np.zeros_like(deg), where=deg > 0)
    return sp.diags(scale) @ m


@dataclass(frozen=True, eq=False)
class GraphStructure:
    """Sparse operators for one directed graph.

    ``neigh`` sums node embeddings over in- and out-neighbours, ``incoming``
    sums edge embeddings over edges entering a node and ``outgoing`` over edges
    leaving it. With ``agg="mean"`` each operator is row-normalized.
    """

    n_nodes: int
    src: np.ndarray
    dst: np.ndarray
    neigh: sp.csr_matrix
    neigh_t: sp.csr_matrix
    incoming: sp.csr_matrix  # (n_nodes, n_edges)
    outgoing: sp.csr_matrix
    src_sum: sp.csr_matrix  # unnormalized incidence, adjoint of gather_src
    dst_sum: sp.csr_matrix
    agg: str

    @classmethod
    def build(cls, n_nodes: int, src, dst, agg: str = "sum") -> "GraphStructure":
        if agg not in AGGREGATIONS:
            raise ValueError(f"aggregation must be one of {AGGREGATIONS}, got {agg!r}")
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        n_edges = len(src)
        ones = np.ones(n_edges)
        eidx = np.arange(n_edges)
        adj = sp.csr_matrix((ones, (src, dst)), shape=(n_nodes, n_nodes))
        neigh = (adj + adj.T).tocsr()
        incoming = sp.csr_matrix((ones, (dst, eidx)), shape=(n_nodes, n_edges))
        outgoing = sp.csr_matrix((ones, (src, eidx)), shape=(n_nodes, n_edges))
        src_sum, dst_sum = outgoing, incoming
        if agg == "mean":
            neigh = _row_normalize(neigh).tocsr()
            incoming = _row_normalize(incoming).tocsr()
            outgoing = _row_normalize(outgoing).tocsr()
        return cls(n_nodes, src, dst, neigh, neigh.T.tocsr(), incoming, outgoing, src_sum, dst_sum, agg)

    @property
    def n_edges(self) -> int:
        return len(self.src)

    def gather_src(self, m: np.ndarray) -> np.ndarray:
        return m[self.src]

    def gather_dst(self, m: np.ndarray) -> np.ndarray:
        return m[self.dst]

    def scatter_src(self, m: np.ndarray) -> np.ndarray:
        """Adjoint of ``gather_src``: sum edge rows into their source node."""
        return self.src_sum @ m

    def scatter_dst(self, m: np.ndarray) -> np.ndarray:
        return self.dst_sum @ m


def undirected_adjacency(n_nodes: int, src, dst) -> sp.csr_matrix:
    adj = sp.csr_matrix((np.ones(len(src)), (src, dst)), shape=(n_nodes, n_nodes))
    return (adj + adj.T).tocsr()


def gcn_layer_forward(h: np.ndarray, adjacency, w1: np.ndarray, w2: np.ndarray, bias: np.ndarray | None = None) -> np.ndarray:
    """Plain GCN layer: ``relu(h W1 + (A h) W2 + b)`` with sum aggregation over ``A``."""
    if h.shape[1] != w1.shape[0] or h.shape[1] != w2.shape[0] or w1.shape[1] != w2.shape[1]:
        raise ValueError(f"shape mismatch: h {h.shape}, W1 {w1.shape}, W2 {w2.shape}")
    if adjacency.shape != (h.shape[0], h.shape[0]):
        raise ValueError(f"adjacency must be {h.shape[0]}x{h.shape[0]}, got {adjacency.shape}")
    z = h @ w1 + (adjacency @ h) @ w2
    if bias is not None:
        z = z + bias
    return relu(z)


LAYER_KEYS = ("W1", "W2", "W3", "W4", "b_node", "W5", "W6", "W7", "b_edge")


def edgnn_layer_forward(h_node, h_edge, gs: GraphStructure, w: dict, *, with_edges: bool = True, cache: dict | None = None):
    """One directed edge-aware layer.

    Node update::

        h_v <- relu(h_v W1 + (sum_{u in N(v)} h_u) W2
                    + (sum over incoming edges h_e) W3
                    + (sum over outgoing edges h_e) W4 + b_node)

    Edge update for ``e = (u, v)``::

        h_e <- relu(h_e W5 + h_u W6 + h_v W7 + b_edge)

    Both updates read the previous layer's embeddings. ``cache`` collects the
    intermediates needed by :func:`edgnn_layer_backward`.
    """
    d_in = h_node.shape[1]
    if h_edge.shape[1] != d_in or h_node.shape[0] != gs.n_nodes or h_edge.shape[0] != gs.n_edges:
        raise ValueError(f"shape mismatch: nodes {h_node.shape}, edges {h_edge.shape}, graph ({gs.n_nodes}, {gs.n_edges})")
    for k in ("W1", "W2", "W3", "W4", "W5", "W6", "W7"):
        if w[k].shape[0] != d_in or w[k].shape[1] != w["W1"].shape[1]:
            raise ValueError(f"{k} has shape {w[k].shape}, expected ({d_in}, {w['W1'].shape[1]})")

    agg_node = gs.neigh @ h_node
    in_edge = gs.incoming @ h_edge
    out_edge = gs.outgoing @ h_edge
    z_node = h_node @ w["W1"] + agg_node @ w["W2"] + in_edge @ w["W3"] + out_edge @ w["W4"] + w["b_node"]
    new_node = relu(z_node)
    new_edge = None
    z_edge = None
    if with_edges:
        z_edge = h_edge @ w["W5"] + gs.gather_src(h_node @ w["W6"]) + gs.gather_dst(h_node @ w["W7"]) + w["b_edge"]
        new_edge = relu(z_edge)
    if cache is not None:
        cache.update(
            h_node=h_node, h_edge=h_edge, agg_node=agg_node, in_edge=in_edge,
            out_edge=out_edge, z_node=z_node, z_edge=z_edge,
        )
    return new_node, new_edge


def edgnn_layer_backward(d_node, d_edge, gs: GraphStructure, w: dict, cache: dict):
    """Reverse pass of :func:`edgnn_layer_forward`.

    Takes gradients w.r.t. the layer outputs and returns
    ``(grads, d_h_node_in, d_h_edge_in)``.
    """
    dz_n = d_node * (cache["z_node"] > 0)
    dz_e = d_edge * (cache["z_edge"] > 0)
    h_node, h_edge = cache["h_node"], cache["h_edge"]

    grads = {
        "W1": h_node.T @ dz_n,
        "W2": cache["agg_node"].T @ dz_n,
        "W3": cache["in_edge"].T @ dz_n,
        "W4": cache["out_edge"].T @ dz_n,
        "b_node": dz_n.sum(axis=0),
        "W5": h_edge.T @ dz_e,
        "b_edge": dz_e.sum(axis=0),
    }
    # gradient flowing into (h_node @ W6) and (h_node @ W7) before the gathers
    ds = gs.scatter_src(dz_e)
    dd = gs.scatter_dst(dz_e)
    grads["W6"] = h_node.T @ ds
    grads["W7"] = h_node.T @ dd

    d_h_node = dz_n @ w["W1"].T + gs.neigh_t @ (dz_n @ w["W2"].T) + ds @ w["W6"].T + dd @ w["W7"].T
    d_h_edge = (
        dz_e @ w["W5"].T
        + gs.incoming.T @ (dz_n @ w["W3"].T)
        + gs.outgoing.T @ (dz_n @ w["W4"].T)
    )
    return grads, d_h_node, d_h_edge
