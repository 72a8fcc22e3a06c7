"""Heuristic comparison algorithms: NRM-VNE and RCR-VNE.

Both reuse the embedder's candidate filter, path search and rollback, so they
differ from the learned policy only in how nodes and links are ordered.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embedder import (
    Embedding,
    NodeMappingFailure,
    embed_with,
    feasible_candidates,
)
from .features import sum_adjacent_bandwidth
from .substrate import SubstrateNetwork
from .vnr import VNR


@dataclass(frozen=True)
class NodeMetric:
    node_id: int
    score: float


def nrm_score(net: SubstrateNetwork, node_id: int) -> float:
    """Residual CPU times summed residual bandwidth of incident intra-domain links."""
    return float(net.cpu_available[node_id]) * sum_adjacent_bandwidth(net, node_id)


def nrm_scores(net: SubstrateNetwork) -> list[NodeMetric]:
    return [NodeMetric(i, nrm_score(net, i)) for i in range(net.num_nodes)]


def _vnode_demand_metric(vnr: VNR) -> list[float]:
    bw = [0.0] * len(vnr.vnodes)
    for vl in vnr.vlinks:
        a, b = vl.endpoints
        bw[a] += vl.bw_demand
        bw[b] += vl.bw_demand
    return [vn.cpu_demand * bw[vn.id] for vn in vnr.vnodes]


def _bandwidth_order(vnr: VNR) -> list[int]:
    return sorted(range(len(vnr.vlinks)), key=lambda i: (-vnr.vlinks[i].bw_demand, i))


def _greedy_place(net: SubstrateNetwork, vnr: VNR, order, score) -> dict[int, int]:
    snap = net.cpu_available.copy()
    mapping: dict[int, int] = {}
    try:
        for vn in order:
            cand = feasible_candidates(net, vn, list(mapping.values()))
            if not len(cand):
                raise NodeMappingFailure(vn.id)
            values = np.array([score(int(c)) for c in cand])
            # argmax keeps the lowest id among equal scores
            chosen = int(cand[int(np.argmax(values))])
            net.allocate_node(chosen, vn.cpu_demand)
            mapping[vn.id] = chosen
    except Exception:
        net.cpu_available[:] = snap
        raise
    return mapping


def nrm_vne_embed(net: SubstrateNetwork, vnr: VNR) -> Embedding:
    demand = _vnode_demand_metric(vnr)
    order = sorted(vnr.vnodes, key=lambda vn: (-demand[vn.id], vn.id))

    def place():
        return _greedy_place(net, vnr, order, lambda p: nrm_score(net, p))

    return embed_with(net, vnr, place, lambda _nm: _bandwidth_order(vnr), prefer_bottleneck=True)


def rcr_vne_embed(net: SubstrateNetwork, vnr: VNR) -> Embedding:
    def place():
        return _greedy_place(net, vnr, vnr.vnodes, lambda p: float(net.cpu_available[p]))

    return embed_with(net, vnr, place, lambda _nm: _bandwidth_order(vnr))
