"""Node mapping, constrained BFS link mapping, atomic embedding and validation."""

from __future__ import annotations

import math
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .features import FeatureExtractor
from .metrics import embedding_cost, embedding_revenue
from .policy import Decision, NoCandidates, PolicyParams, forward, select_node
from .substrate import SubstrateNetwork
from .vnr import VNR, VirtualNode


class EmbeddingFailure(Exception):
    """A VNR could not be embedded; the ledger is left as it was."""


class NodeMappingFailure(EmbeddingFailure):
    def __init__(self, vnode_id: int):
        super().__init__(f"no feasible substrate node for virtual node {vnode_id}")
        self.vnode_id = vnode_id


class LinkMappingFailure(EmbeddingFailure):
    def __init__(self, vlink_index: int):
        super().__init__(f"no feasible substrate path for virtual link {vlink_index}")
        self.vlink_index = vlink_index


@dataclass(frozen=True)
class Embedding:
    vnr: VNR
    node_map: Mapping[int, int]
    link_map: Mapping[int, tuple[int, ...]]
    revenue: float = field(init=False)
    cost: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "node_map", dict(self.node_map))
        object.__setattr__(self, "link_map", {k: tuple(v) for k, v in self.link_map.items()})
        object.__setattr__(self, "revenue", embedding_revenue(self.vnr))
        object.__setattr__(self, "cost", embedding_cost(self.vnr, self))

    @property
    def vnr_id(self) -> int:
        return self.vnr.id

    def hops(self, vlink_index: int) -> int:
        return len(self.link_map[vlink_index])

    def cpu_usage(self) -> list[tuple[int, float]]:
        return [(self.node_map[vn.id], vn.cpu_demand) for vn in self.vnr.vnodes]

    def bw_usage(self) -> list[tuple[tuple[int, ...], float]]:
        return [(self.link_map[i], vl.bw_demand) for i, vl in enumerate(self.vnr.vlinks)]


# selector(net, vnr, vnode, candidates, used) -> substrate node id
Selector = Callable[[SubstrateNetwork, VNR, VirtualNode, np.ndarray, Sequence[int]], int]


def feasible_candidates(net: SubstrateNetwork, vnode: VirtualNode, used: Sequence[int] = ()) -> np.ndarray:
    """Nodes in the target domain with enough residual CPU, not already used by this VNR."""
    ok = (net.domain == int(vnode.target_domain)) & (net.cpu_available >= vnode.cpu_demand)
    if len(used):
        ok[list(used)] = False
    return np.flatnonzero(ok)


class PolicySelector:
    """Node selector driven by policy parameters.

    In ``"sample"`` mode every choice is appended to ``decisions`` for the
    REINFORCE update; callers clear it between requests.
    """

    def __init__(self, params: PolicyParams, mode: str = "greedy",
                 rng: np.random.Generator | None = None, record: bool = False):
        self.params = params
        self.mode = mode
        self.rng = rng
        self.record = record
        self.decisions: list[Decision] = []
        self._extractor: FeatureExtractor | None = None

    def __call__(self, net, vnr, vnode, candidates, used) -> int:
        if self._extractor is None or self._extractor.net is not net:
            self._extractor = FeatureExtractor(net)
        unembedded = np.ones(net.num_nodes, dtype=bool)
        if len(used):
            unembedded[list(used)] = False
        matrix = self._extractor.matrix(unembedded)
        dist = forward(self.params, matrix, candidates)
        chosen = select_node(dist, self.mode, self.rng)
        if self.record:
            self.decisions.append(
                Decision(matrix, dist.candidate_mask, chosen, math.log(dist.probs[chosen]))
            )
        return chosen


def node_order(vnr: VNR) -> list[VirtualNode]:
    """Descending CPU demand, lower id first on ties."""
    return sorted(vnr.vnodes, key=lambda vn: (-vn.cpu_demand, vn.id))


def map_nodes(net: SubstrateNetwork, vnr: VNR, selector: Selector,
              order: Sequence[VirtualNode] | None = None) -> dict[int, int]:
    """Place every virtual node, allocating CPU as it goes.

    On failure the CPU allocated here is returned before raising.
    """
    order = node_order(vnr) if order is None else order
    snap = net.cpu_available.copy()
    mapping: dict[int, int] = {}
    try:
        for vn in order:
            cand = feasible_candidates(net, vn, list(mapping.values()))
            if not len(cand):
                raise NodeMappingFailure(vn.id)
            try:
                chosen = int(selector(net, vnr, vn, cand, list(mapping.values())))
            except NoCandidates:
                raise NodeMappingFailure(vn.id) from None
            if chosen not in set(cand.tolist()):
                raise ValueError(f"selector returned infeasible node {chosen}")
            net.allocate_node(chosen, vn.cpu_demand)
            mapping[vn.id] = chosen
    except Exception:
        net.cpu_available[:] = snap
        raise
    return mapping


def bfs_shortest_feasible_path(
    net: SubstrateNetwork,
    src: int,
    dst: int,
    bw_demand: float,
    delay_budget: float = math.inf,
    prefer_bottleneck: bool = False,
) -> list[int] | None:
    """Minimum-hop path whose links all carry ``bw_demand`` and whose total delay fits the budget.

    Breadth-first over hop levels. Each node keeps the labels that are not
    dominated by a label reached in as few or fewer hops (lower delay, and with
    ``prefer_bottleneck`` also a wider bottleneck), so a longer but faster route is
    still found when the shortest one is too slow. Among minimum-hop paths the
    lowest-delay one wins; with ``prefer_bottleneck`` the widest bottleneck wins
    first. Neighbors expand in ascending id order, so results are deterministic.
    Returns the link ids in order, or None.
    """
    if src == dst:
        raise ValueError("source and destination coincide")
    net._check_node(src)
    net._check_node(dst)
    if prefer_bottleneck:
        return _pareto_search(net, src, dst, bw_demand, delay_budget)
    bw_av = net.bw_available.tolist()
    adjacency = net.weighted_adjacency()
    best = {src: 0.0}  # lowest delay reached at any earlier level
    levels: list[dict[int, tuple[float, int, int]]] = [{src: (0.0, -1, -1)}]
    for _ in range(net.num_nodes):
        prev = levels[-1]
        level: dict[int, tuple[float, int, int]] = {}
        for u in sorted(prev):
            d0 = prev[u][0]
            for v, lid, dl in adjacency[u]:
                if bw_av[lid] < bw_demand:
                    continue
                d = d0 + dl
                if d > delay_budget or d >= best.get(v, math.inf):
                    continue
                cur = level.get(v)
                if cur is None or d < cur[0]:
                    level[v] = (d, u, lid)
        if not level:
            return None
        levels.append(level)
        if dst in level:
            path = []
            node = dst
            for lv in reversed(levels[1:]):
                _, u, lid = lv[node]
                path.append(lid)
                node = u
            return path[::-1]
        for v, (d, _, _) in level.items():
            best[v] = d
    return None


def _pareto_search(net, src, dst, bw_demand, delay_budget):
    """Level-wise search keeping (delay, bottleneck) Pareto labels; widest bottleneck wins."""
    bw_av = net.bw_available.tolist()
    adjacency = net.weighted_adjacency()
    # label: (delay, bottleneck, node, link_id, parent)
    root = (0.0, math.inf, src, -1, None)
    seen: dict[int, list[tuple[float, float]]] = {src: [(0.0, math.inf)]}
    frontier: dict[int, list[tuple]] = {src: [root]}
    for _ in range(net.num_nodes):
        nxt: dict[int, list[tuple]] = {}
        for u in sorted(frontier):
            for label in frontier[u]:
                d0, b0 = label[0], label[1]
                for v, lid, dl in adjacency[u]:
                    if bw_av[lid] < bw_demand:
                        continue
                    d = d0 + dl
                    if d > delay_budget:
                        continue
                    b = min(b0, bw_av[lid])
                    if _dominated(seen.get(v, ()), d, b):
                        continue
                    cur = nxt.setdefault(v, [])
                    if _dominated([(x[0], x[1]) for x in cur], d, b):
                        continue
                    cur[:] = [x for x in cur if not (d <= x[0] and b >= x[1])]
                    cur.append((d, b, v, lid, label))
        if not nxt:
            return None
        if dst in nxt:
            best = min(nxt[dst], key=lambda x: (-x[1], x[0]))
            path = []
            node = best
            while node[4] is not None:
                path.append(node[3])
                node = node[4]
            return path[::-1]
        for v, labels in nxt.items():
            seen.setdefault(v, []).extend((x[0], x[1]) for x in labels)
        frontier = nxt
    return None


def _dominated(labels, d: float, b: float) -> bool:
    return any(dd <= d and bb >= b for dd, bb in labels)


def link_order(vnr: VNR, node_map: Mapping[int, int], net: SubstrateNetwork) -> list[int]:
    """Intra-domain virtual links first, then cross-domain; ascending index within each class."""
    intra, cross = [], []
    for idx, vl in enumerate(vnr.vlinks):
        a, b = vl.endpoints
        same = net.domain[node_map[a]] == net.domain[node_map[b]]
        (intra if same else cross).append(idx)
    return intra + cross


def map_links(net: SubstrateNetwork, vnr: VNR, node_map: Mapping[int, int],
              order: Sequence[int] | None = None, prefer_bottleneck: bool = False) -> dict[int, tuple[int, ...]]:
    """Route every virtual link, allocating bandwidth as it goes.

    On failure the bandwidth allocated here is returned before raising.
    """
    order = link_order(vnr, node_map, net) if order is None else order
    snap = net.bw_available.copy()
    paths: dict[int, tuple[int, ...]] = {}
    try:
        for idx in order:
            vl = vnr.vlinks[idx]
            a, b = vl.endpoints
            path = bfs_shortest_feasible_path(
                net, node_map[a], node_map[b], vl.bw_demand, vl.delay_bound, prefer_bottleneck
            )
            if path is None:
                raise LinkMappingFailure(idx)
            net.allocate_path(path, vl.bw_demand)
            paths[idx] = tuple(path)
    except Exception:
        net.bw_available[:] = snap
        raise
    return paths


def embed_vnr(net: SubstrateNetwork, vnr: VNR, selector: Selector) -> Embedding:
    """Map nodes, then links; register and return the embedding.

    Raises :class:`EmbeddingFailure` with the ledger restored bit-for-bit.
    """
    return embed_with(net, vnr, lambda: map_nodes(net, vnr, selector))


def embed_with(net: SubstrateNetwork, vnr: VNR, place: Callable[[], dict[int, int]],
               order: Callable[[dict[int, int]], Sequence[int]] | None = None,
               prefer_bottleneck: bool = False) -> Embedding:
    snap = net.snapshot()
    try:
        node_map = place()
        lorder = order(node_map) if order is not None else None
        link_map = map_links(net, vnr, node_map, lorder, prefer_bottleneck)
        emb = Embedding(vnr, node_map, link_map)
        net.register(emb)
    except BaseException:
        net.restore(snap)
        raise
    return emb


@dataclass(frozen=True)
class Violation:
    constraint: str
    element: object
    message: str


def validate_embedding(net: SubstrateNetwork, vnr: VNR, emb: Embedding,
                       before: tuple[np.ndarray, np.ndarray] | None = None) -> list[Violation]:
    """Check an embedding against the ledger state it was applied to.

    ``net`` provides topology and, unless ``before`` is given, the pre-apply
    ``(cpu_available, bw_available)`` ledger. Returns every violation found;
    an empty list means the embedding is valid.
    """
    cpu_av, bw_av = before if before is not None else (net.cpu_available, net.bw_available)
    out: list[Violation] = []
    nm = emb.node_map

    vids = {vn.id for vn in vnr.vnodes}
    if set(nm) != vids:
        out.append(Violation("node_mapping", sorted(vids ^ set(nm)), "every virtual node must be mapped exactly once"))
    hosts: dict[int, list[int]] = {}
    cpu_load: dict[int, float] = {}
    for vn in vnr.vnodes:
        if vn.id not in nm:
            continue
        p = nm[vn.id]
        if not 0 <= p < net.num_nodes:
            out.append(Violation("node_mapping", vn.id, f"mapped to unknown node {p}"))
            continue
        if net.domain[p] != int(vn.target_domain):
            out.append(Violation("domain", vn.id, f"node {p} is outside domain {vn.target_domain.name}"))
        hosts.setdefault(p, []).append(vn.id)
        if cpu_av[p] < vn.cpu_demand:
            out.append(Violation("node_capacity", vn.id, f"node {p} has {cpu_av[p]} < {vn.cpu_demand}"))
        cpu_load[p] = cpu_load.get(p, 0.0) + vn.cpu_demand
    for p, vs in hosts.items():
        if len(vs) > 1:
            out.append(Violation("co_location", p, f"virtual nodes {vs} share substrate node {p}"))
    for p, load in cpu_load.items():
        if load > cpu_av[p]:
            out.append(Violation("node_total", p, f"total CPU {load} exceeds {cpu_av[p]}"))

    bw_load: dict[int, float] = {}
    if set(emb.link_map) != set(range(len(vnr.vlinks))):
        out.append(Violation("link_mapping", sorted(set(emb.link_map) ^ set(range(len(vnr.vlinks)))),
                             "every virtual link must be mapped exactly once"))
    for idx, vl in enumerate(vnr.vlinks):
        path = emb.link_map.get(idx)
        if path is None:
            continue
        a, b = vl.endpoints
        if a not in nm or b not in nm:
            continue
        src, dst = nm[a], nm[b]
        if not path:
            out.append(Violation("link_mapping", idx, "virtual link has no substrate path"))
            continue
        if any(not 0 <= lid < net.num_links for lid in path):
            out.append(Violation("unknown_link", idx, "path references unknown links"))
            continue
        for lid in path:
            if bw_av[lid] < vl.bw_demand:
                out.append(Violation("link_capacity", (idx, lid), f"link {lid} has {bw_av[lid]} < {vl.bw_demand}"))
            bw_load[lid] = bw_load.get(lid, 0.0) + vl.bw_demand
        total_delay = float(sum(net.delay[lid] for lid in path))
        if total_delay > vl.delay_bound:
            out.append(Violation("delay", idx, f"path delay {total_delay} exceeds bound {vl.delay_bound}"))
        out.extend(_flow_violations(net, idx, path, src, dst))
    for lid, load in bw_load.items():
        if load > bw_av[lid]:
            out.append(Violation("link_total", lid, f"total bandwidth {load} exceeds {bw_av[lid]}"))
    return out


def _flow_violations(net: SubstrateNetwork, idx: int, path: Sequence[int], src: int, dst: int) -> list[Violation]:
    """Unit-flow conservation: +1 out of the source image, -1 at the sink, 0 elsewhere."""
    net_out: dict[int, int] = {}
    cur = src
    visited = [src]
    for lid in path:
        u, v = int(net.link_u[lid]), int(net.link_v[lid])
        if cur == u:
            nxt = v
        elif cur == v:
            nxt = u
        else:
            return [Violation("flow", idx, f"link {lid} does not continue the path at node {cur}")]
        net_out[cur] = net_out.get(cur, 0) + 1
        net_out[nxt] = net_out.get(nxt, 0) - 1
        cur = nxt
        visited.append(cur)
    out = []
    for node in set(net_out) | {src, dst}:
        want = 1 if node == src else -1 if node == dst else 0
        if net_out.get(node, 0) != want:
            out.append(Violation("flow", (idx, node), f"net outflow {net_out.get(node, 0)} != {want}"))
    if len(set(visited)) != len(visited):
        out.append(Violation("simple", idx, "path revisits a node"))
    return out
