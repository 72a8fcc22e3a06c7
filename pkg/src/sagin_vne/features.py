"""Per-node observation features for the placement policy.

Four raw attributes per substrate node: residual CPU, summed residual bandwidth
of incident intra-domain links, summed delay of those links, and the average
hop distance to the in-domain nodes not yet used by the current request. The
matrix fed to the policy min-max normalizes each column.
"""

from __future__ import annotations

from collections.abc import Collection

import numpy as np

from .substrate import SubstrateNetwork

FEATURE_NAMES = ("cpu", "sum_bw", "sum_delay", "avg_dist")


def sum_adjacent_bandwidth(net: SubstrateNetwork, node_id: int) -> float:
    net._check_node(node_id)
    return float(
        sum(net.bw_available[lid] for _, lid in net.adjacency[node_id] if not net.inter_domain[lid])
    )


def sum_adjacent_delay(net: SubstrateNetwork, node_id: int) -> float:
    net._check_node(node_id)
    return float(
        sum(net.delay[lid] for _, lid in net.adjacency[node_id] if not net.inter_domain[lid])
    )


def avg_distance_to_unembedded(
    net: SubstrateNetwork, node_id: int, unembedded: Collection[int]
) -> float:
    net._check_node(node_id)
    hops = net.domain_hops()
    dom = net.domain[node_id]
    others = [u for u in unembedded if u != node_id and net.domain[u] == dom]
    if not others:
        return 0.0
    return float(sum(hops[node_id, u] for u in others) / (len(others) + 1))


class FeatureExtractor:
    """Vectorized feature extraction with the static parts of a network precomputed."""

    def __init__(self, net: SubstrateNetwork):
        self.net = net
        n, m = net.num_nodes, net.num_links
        inc = np.zeros((n, m))
        intra = np.flatnonzero(~net.inter_domain)
        inc[net.link_u[intra], intra] = 1.0
        inc[net.link_v[intra], intra] = 1.0
        self.incidence = inc
        self.sum_delay = inc @ net.delay
        same = net.domain[:, None] == net.domain[None, :]
        np.fill_diagonal(same, False)
        self.same_domain = same.astype(float)
        self.hops = np.where(same, net.domain_hops(), 0.0)

    def raw(self, unembedded_mask: np.ndarray) -> np.ndarray:
        net = self.net
        mask = np.asarray(unembedded_mask, dtype=float)
        out = np.empty((net.num_nodes, 4))
        out[:, 0] = net.cpu_available
        out[:, 1] = self.incidence @ net.bw_available
        out[:, 2] = self.sum_delay
        count = self.same_domain @ mask
        out[:, 3] = (self.hops @ mask) / (count + 1.0)
        return out

    def matrix(self, unembedded_mask: np.ndarray) -> np.ndarray:
        return normalize_columns(self.raw(unembedded_mask))


def normalize_columns(raw: np.ndarray) -> np.ndarray:
    """Min-max scale each column onto [0, 1]; constant columns become 0."""
    lo = raw.min(axis=0)
    span = raw.max(axis=0) - lo
    safe = np.where(span > 0, span, 1.0)
    out = (raw - lo) / safe
    out[:, span <= 0] = 0.0
    return np.clip(out, 0.0, 1.0)


def unembedded_mask(net: SubstrateNetwork, unembedded: Collection[int]) -> np.ndarray:
    mask = np.zeros(net.num_nodes, dtype=bool)
    mask[list(unembedded)] = True
    return mask


def extract_feature_matrix(
    net: SubstrateNetwork,
    unembedded: Collection[int] | None = None,
    extractor: FeatureExtractor | None = None,
) -> np.ndarray:
    """Normalized ``(num_nodes, 4)`` feature matrix, rows in node-id order.

    ``unembedded`` defaults to every node.
    """
    if net.num_nodes == 0:
        raise ValueError("empty network")
    extractor = extractor or FeatureExtractor(net)
    if unembedded is None:
        mask = np.ones(net.num_nodes, dtype=bool)
    else:
        mask = unembedded_mask(net, unembedded)
    return extractor.matrix(mask)
