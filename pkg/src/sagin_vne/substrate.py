"""Layered space/air/ground substrate network and its resource ledger."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class Domain(enum.IntEnum):
    SPACE = 0
    AIR = 1
    GROUND = 2

    @classmethod
    def parse(cls, text: str) -> "Domain":
        try:
            return cls[text.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown domain {text!r}") from None


class LedgerError(Exception):
    """Base class for resource ledger violations."""


class InsufficientCapacity(LedgerError):
    pass


class InsufficientBandwidth(LedgerError):
    def __init__(self, link_id: int, available: float, amount: float):
        super().__init__(f"link {link_id}: available {available} < requested {amount}")
        self.link_id = link_id


class UnknownElement(LedgerError, KeyError):
    pass


class DoubleRelease(LedgerError):
    pass


Range = tuple[float, float]


@dataclass(frozen=True)
class SubstrateConfig:
    """Generation parameters. Defaults reproduce the 100-node, ~600-link setup."""

    space_nodes: int = 10
    air_nodes: int = 30
    ground_nodes: int = 60
    # intra-domain link targets, spanning tree included
    space_links: int = 30
    air_links: int = 140
    ground_links: int = 424
    inter_links: int = 2  # per domain pair
    space_cpu: Range = (20, 40)
    air_cpu: Range = (20, 40)
    ground_cpu: Range = (50, 100)
    space_bw: Range = (50, 100)
    air_bw: Range = (50, 100)
    ground_bw: Range = (50, 100)
    space_delay: Range = (20.0, 40.0)
    air_delay: Range = (10.0, 30.0)
    ground_delay: Range = (1.0, 20.0)
    inter_bw: Range = (50, 100)
    inter_delay: Range = (40.0, 60.0)

    def node_count(self, domain: Domain) -> int:
        return getattr(self, f"{domain.name.lower()}_nodes")

    def link_count(self, domain: Domain) -> int:
        return getattr(self, f"{domain.name.lower()}_links")

    def cpu_range(self, domain: Domain) -> Range:
        return getattr(self, f"{domain.name.lower()}_cpu")

    def bw_range(self, domain: Domain) -> Range:
        return getattr(self, f"{domain.name.lower()}_bw")

    def delay_range(self, domain: Domain) -> Range:
        return getattr(self, f"{domain.name.lower()}_delay")

    def scaled(self, factor: float) -> "SubstrateConfig":
        """Same densities and ranges with node and intra-link counts multiplied by ``factor``."""
        counts = {}
        for d in Domain:
            name = d.name.lower()
            counts[f"{name}_nodes"] = max(1, round(self.node_count(d) * factor))
            counts[f"{name}_links"] = round(self.link_count(d) * factor)
        return replace(self, **counts)

    def validate(self) -> None:
        for d in Domain:
            n = self.node_count(d)
            m = self.link_count(d)
            if n <= 0:
                raise ValueError(f"{d.name.lower()}_nodes must be positive")
            if m < n - 1:
                raise ValueError(
                    f"{d.name.lower()}_links={m} cannot connect {n} nodes (need >= {n - 1})"
                )
            if m > n * (n - 1) // 2:
                raise ValueError(f"{d.name.lower()}_links={m} exceeds simple-graph maximum")
            for r in (self.cpu_range(d), self.bw_range(d), self.delay_range(d)):
                _check_range(r)
            if self.delay_range(d)[0] <= 0:
                raise ValueError("link delays must be positive")
        if self.inter_links < 0:
            raise ValueError("inter_links must be non-negative")
        _check_range(self.inter_bw)
        _check_range(self.inter_delay)
        if self.inter_delay[0] <= 0:
            raise ValueError("link delays must be positive")


def _check_range(r: Range) -> None:
    lo, hi = r
    if not lo <= hi:
        raise ValueError(f"empty range {r}")


@dataclass(frozen=True)
class SubstrateNode:
    id: int
    domain: Domain
    cpu_capacity: float
    cpu_available: float


@dataclass(frozen=True)
class SubstrateLink:
    id: int
    endpoints: tuple[int, int]
    bw_capacity: float
    bw_available: float
    delay: float
    inter_domain: bool


@dataclass
class SubstrateNetwork:
    """Undirected substrate graph backed by flat numpy ledgers.

    Node ``i`` and link ``j`` are positions in the arrays. ``adjacency[u]``
    lists ``(neighbor, link_id)`` pairs sorted by neighbor id, then link id.
    """

    domain: np.ndarray
    cpu_capacity: np.ndarray
    link_u: np.ndarray
    link_v: np.ndarray
    bw_capacity: np.ndarray
    delay: np.ndarray
    cpu_available: np.ndarray = None
    bw_available: np.ndarray = None
    active: dict = field(default_factory=dict)

    def __post_init__(self):
        self.domain = np.asarray(self.domain, dtype=np.int64)
        self.cpu_capacity = np.asarray(self.cpu_capacity, dtype=float)
        self.link_u = np.asarray(self.link_u, dtype=np.int64)
        self.link_v = np.asarray(self.link_v, dtype=np.int64)
        self.bw_capacity = np.asarray(self.bw_capacity, dtype=float)
        self.delay = np.asarray(self.delay, dtype=float)
        if self.cpu_available is None:
            self.cpu_available = self.cpu_capacity.copy()
        if self.bw_available is None:
            self.bw_available = self.bw_capacity.copy()
        n, m = len(self.domain), len(self.link_u)
        if np.any(self.link_u == self.link_v):
            raise ValueError("self-loops are not allowed")
        if m and (self.link_u.max(initial=0) >= n or self.link_v.max(initial=0) >= n):
            raise ValueError("link endpoint out of range")
        if np.any(self.delay <= 0):
            raise ValueError("link delays must be positive")
        self.inter_domain = self.domain[self.link_u] != self.domain[self.link_v]
        adjacency: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        for lid, (u, v) in enumerate(zip(self.link_u.tolist(), self.link_v.tolist())):
            adjacency[u].append((v, lid))
            adjacency[v].append((u, lid))
        for row in adjacency:
            row.sort()
        self.adjacency = adjacency
        self.boundary_nodes = frozenset(
            int(x)
            for x in np.concatenate(
                [self.link_u[self.inter_domain], self.link_v[self.inter_domain]]
            )
        )
        self._domain_hops = None
        self._weighted_adjacency = None

    def weighted_adjacency(self) -> list[list[tuple[int, int, float]]]:
        """``adjacency`` with each entry extended by the link delay, as plain Python numbers."""
        if self._weighted_adjacency is None:
            delay = self.delay.tolist()
            self._weighted_adjacency = [
                [(v, lid, delay[lid]) for v, lid in row] for row in self.adjacency
            ]
        return self._weighted_adjacency

    # -- views ---------------------------------------------------------------
    @property
    def num_nodes(self) -> int:
        return len(self.domain)

    @property
    def num_links(self) -> int:
        return len(self.link_u)

    @property
    def nodes(self) -> list[SubstrateNode]:
        return [self.node(i) for i in range(self.num_nodes)]

    @property
    def links(self) -> list[SubstrateLink]:
        return [self.link(j) for j in range(self.num_links)]

    def node(self, node_id: int) -> SubstrateNode:
        self._check_node(node_id)
        return SubstrateNode(
            node_id,
            Domain(int(self.domain[node_id])),
            float(self.cpu_capacity[node_id]),
            float(self.cpu_available[node_id]),
        )

    def link(self, link_id: int) -> SubstrateLink:
        self._check_link(link_id)
        return SubstrateLink(
            link_id,
            (int(self.link_u[link_id]), int(self.link_v[link_id])),
            float(self.bw_capacity[link_id]),
            float(self.bw_available[link_id]),
            float(self.delay[link_id]),
            bool(self.inter_domain[link_id]),
        )

    def nodes_in(self, domain: Domain) -> np.ndarray:
        return np.flatnonzero(self.domain == int(domain))

    def other_end(self, link_id: int, node_id: int) -> int:
        u, v = int(self.link_u[link_id]), int(self.link_v[link_id])
        if node_id == u:
            return v
        if node_id == v:
            return u
        raise ValueError(f"node {node_id} is not an endpoint of link {link_id}")

    def domain_hops(self) -> np.ndarray:
        """All-pairs hop counts over intra-domain links; cross-domain entries are -1.

        Pairs in the same domain that are not connected by intra-domain links get
        the domain's node count as a penalty distance.
        """
        if self._domain_hops is None:
            n = self.num_nodes
            hops = np.full((n, n), -1, dtype=float)
            for d in Domain:
                members = self.nodes_in(d)
                penalty = float(len(members))
                for src in members.tolist():
                    dist = {src: 0}
                    frontier = [src]
                    while frontier:
                        nxt = []
                        for u in frontier:
                            for v, lid in self.adjacency[u]:
                                if self.inter_domain[lid] or v in dist:
                                    continue
                                dist[v] = dist[u] + 1
                                nxt.append(v)
                        frontier = nxt
                    row = np.full(len(members), penalty)
                    for k, v in enumerate(members.tolist()):
                        if v in dist:
                            row[k] = dist[v]
                    hops[src, members] = row
            hops.setflags(write=False)
            self._domain_hops = hops
        return self._domain_hops

    def _check_node(self, node_id: int) -> None:
        if not 0 <= node_id < self.num_nodes:
            raise UnknownElement(f"unknown node id {node_id}")

    def _check_link(self, link_id: int) -> None:
        if not 0 <= link_id < self.num_links:
            raise UnknownElement(f"unknown link id {link_id}")

    # -- ledger --------------------------------------------------------------
    def allocate_node(self, node_id: int, amount: float) -> None:
        self._check_node(node_id)
        if amount < 0:
            raise ValueError("amount must be non-negative")
        available = self.cpu_available[node_id]
        if amount > available:
            raise InsufficientCapacity(
                f"node {node_id}: available {available} < requested {amount}"
            )
        self.cpu_available[node_id] = available - amount

    def allocate_path(self, path: Sequence[int], amount: float) -> None:
        if amount < 0:
            raise ValueError("amount must be non-negative")
        for lid in path:
            self._check_link(lid)
        # repeated links on one path draw the amount once per occurrence
        need: dict[int, float] = {}
        for lid in path:
            need[lid] = need.get(lid, 0.0) + amount
        for lid in path:
            if need[lid] > self.bw_available[lid]:
                raise InsufficientBandwidth(lid, float(self.bw_available[lid]), amount)
        for lid in path:
            self.bw_available[lid] -= amount

    def snapshot(self) -> tuple[np.ndarray, np.ndarray]:
        return self.cpu_available.copy(), self.bw_available.copy()

    def restore(self, snap: tuple[np.ndarray, np.ndarray]) -> None:
        self.cpu_available[:] = snap[0]
        self.bw_available[:] = snap[1]

    def register(self, embedding) -> None:
        """Record an embedding whose resources have just been allocated."""
        if embedding.vnr_id in self.active:
            raise LedgerError(f"VNR {embedding.vnr_id} already holds an embedding")
        self.active[embedding.vnr_id] = embedding

    def apply_embedding(self, vnr, embedding) -> None:
        """Allocate every demand of ``embedding`` atomically and register it."""
        snap = self.snapshot()
        try:
            for vnode in vnr.vnodes:
                self.allocate_node(embedding.node_map[vnode.id], vnode.cpu_demand)
            for idx, vlink in enumerate(vnr.vlinks):
                self.allocate_path(embedding.link_map[idx], vlink.bw_demand)
        except LedgerError:
            self.restore(snap)
            raise
        self.register(embedding)

    def release_embedding(self, embedding) -> None:
        if self.active.get(embedding.vnr_id) is not embedding:
            raise DoubleRelease(f"embedding of VNR {embedding.vnr_id} is not active")
        del self.active[embedding.vnr_id]
        for node_id, amount in embedding.cpu_usage():
            self.cpu_available[node_id] += amount
        for path, amount in embedding.bw_usage():
            for lid in path:
                self.bw_available[lid] += amount

    def reset(self) -> None:
        self.cpu_available[:] = self.cpu_capacity
        self.bw_available[:] = self.bw_capacity
        self.active.clear()

    def copy(self) -> "SubstrateNetwork":
        net = SubstrateNetwork(
            self.domain,
            self.cpu_capacity,
            self.link_u,
            self.link_v,
            self.bw_capacity,
            self.delay,
            self.cpu_available.copy(),
            self.bw_available.copy(),
        )
        net._domain_hops = self._domain_hops
        return net

    def same_topology(self, other: "SubstrateNetwork") -> bool:
        return (
            np.array_equal(self.domain, other.domain)
            and np.array_equal(self.cpu_capacity, other.cpu_capacity)
            and np.array_equal(self.link_u, other.link_u)
            and np.array_equal(self.link_v, other.link_v)
            and np.array_equal(self.bw_capacity, other.bw_capacity)
            and np.array_equal(self.delay, other.delay)
        )


# module-level aliases mirroring the ledger methods
def allocate_node(net: SubstrateNetwork, node_id: int, amount: float) -> None:
    net.allocate_node(node_id, amount)


def allocate_path(net: SubstrateNetwork, path: Sequence[int], amount: float) -> None:
    net.allocate_path(path, amount)


def release_embedding(net: SubstrateNetwork, embedding) -> None:
    net.release_embedding(embedding)


def _uniform_int(rng: np.random.Generator, r: Range, size: int) -> np.ndarray:
    return rng.integers(int(r[0]), int(r[1]), size=size, endpoint=True).astype(float)


def _random_tree(rng: np.random.Generator, members: list[int]) -> list[tuple[int, int]]:
    order = rng.permutation(len(members)).tolist()
    edges = []
    for k in range(1, len(order)):
        parent = order[int(rng.integers(k))]
        edges.append(_pair(members[order[k]], members[parent]))
    return edges


def _pair(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


def generate_substrate(cfg: SubstrateConfig, rng: np.random.Generator) -> SubstrateNetwork:
    """Draw a layered substrate.

    Each domain gets a random spanning tree topped up with uniformly chosen
    extra pairs until its link target is met, then ``cfg.inter_links`` links join
    every pair of domains. CPU and bandwidth are integer draws from their closed
    ranges (exact ledger arithmetic); delays are continuous draws.
    """
    cfg.validate()
    domains = []
    for d in Domain:
        domains += [int(d)] * cfg.node_count(d)
    domain = np.array(domains, dtype=np.int64)
    cpu = np.empty(len(domain))
    for d in Domain:
        idx = np.flatnonzero(domain == int(d))
        cpu[idx] = _uniform_int(rng, cfg.cpu_range(d), len(idx))

    pairs: list[tuple[int, int]] = []
    bw: list[np.ndarray] = []
    delay: list[np.ndarray] = []
    for d in Domain:
        members = np.flatnonzero(domain == int(d)).tolist()
        tree = _random_tree(rng, members)
        chosen = set(tree)
        extra_needed = cfg.link_count(d) - len(tree)
        if extra_needed:
            rest = [p for p in itertools.combinations(members, 2) if p not in chosen]
            pick = rng.choice(len(rest), size=extra_needed, replace=False)
            extra = [rest[k] for k in sorted(pick.tolist())]
        else:
            extra = []
        dom_pairs = tree + extra
        pairs += dom_pairs
        bw.append(_uniform_int(rng, cfg.bw_range(d), len(dom_pairs)))
        delay.append(rng.uniform(*cfg.delay_range(d), size=len(dom_pairs)))

    for a, b in itertools.combinations(Domain, 2):
        ma = np.flatnonzero(domain == int(a)).tolist()
        mb = np.flatnonzero(domain == int(b)).tolist()
        candidates = [_pair(u, v) for u in ma for v in mb]
        if cfg.inter_links <= len(candidates):
            pick = rng.choice(len(candidates), size=cfg.inter_links, replace=False).tolist()
        else:
            # too few distinct node pairs: fall back to parallel links
            pick = rng.integers(len(candidates), size=cfg.inter_links).tolist()
        pairs += [candidates[k] for k in pick]
        bw.append(_uniform_int(rng, cfg.inter_bw, cfg.inter_links))
        delay.append(rng.uniform(*cfg.inter_delay, size=cfg.inter_links))

    arr = np.array(pairs, dtype=np.int64).reshape(-1, 2)
    return SubstrateNetwork(
        domain=domain,
        cpu_capacity=cpu,
        link_u=arr[:, 0],
        link_v=arr[:, 1],
        bw_capacity=np.concatenate(bw) if bw else np.empty(0),
        delay=np.concatenate(delay) if delay else np.empty(0),
    )


def _num(x: float) -> str:
    x = float(x)
    return str(int(x)) if x.is_integer() else repr(x)


def dumps_substrate(net: SubstrateNetwork) -> str:
    lines = [f"nodes {net.num_nodes} links {net.num_links}"]
    for i in range(net.num_nodes):
        lines.append(f"node {i} {Domain(int(net.domain[i])).name.lower()} {_num(net.cpu_capacity[i])}")
    for j in range(net.num_links):
        lines.append(
            f"link {int(net.link_u[j])} {int(net.link_v[j])} "
            f"{_num(net.bw_capacity[j])} {_num(net.delay[j])}"
        )
    return "\n".join(lines) + "\n"


def loads_substrate(text: str) -> SubstrateNetwork:
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows or rows[0][0] != "nodes" or len(rows[0]) != 4 or rows[0][2] != "links":
        raise ValueError("substrate file must start with 'nodes <n> links <m>'")
    n, m = int(rows[0][1]), int(rows[0][3])
    domain = [None] * n
    cpu = [None] * n
    links = []
    for row in rows[1:]:
        if row[0] == "node" and len(row) == 4:
            i = int(row[1])
            if not 0 <= i < n or domain[i] is not None:
                raise ValueError(f"bad node id {i}")
            domain[i] = int(Domain.parse(row[2]))
            cpu[i] = float(row[3])
        elif row[0] == "link" and len(row) == 5:
            links.append((int(row[1]), int(row[2]), float(row[3]), float(row[4])))
        else:
            raise ValueError(f"unrecognized line: {' '.join(row)}")
    if any(d is None for d in domain):
        raise ValueError("missing node lines")
    if len(links) != m:
        raise ValueError(f"expected {m} links, found {len(links)}")
    arr = np.array([l[:2] for l in links], dtype=np.int64).reshape(-1, 2)
    return SubstrateNetwork(
        domain=domain,
        cpu_capacity=cpu,
        link_u=arr[:, 0],
        link_v=arr[:, 1],
        bw_capacity=[l[2] for l in links],
        delay=[l[3] for l in links],
    )


def save_substrate(net: SubstrateNetwork, path: str | Path) -> None:
    Path(path).write_text(dumps_substrate(net))


def load_substrate(path: str | Path) -> SubstrateNetwork:
    return loads_substrate(Path(path).read_text())


def from_edges(
    domains: Iterable[Domain | int],
    cpu: Iterable[float],
    edges: Iterable[tuple[int, int, float, float]],
) -> SubstrateNetwork:
    """Build a network from explicit ``(u, v, bandwidth, delay)`` tuples."""
    edges = list(edges)
    arr = np.array([e[:2] for e in edges], dtype=np.int64).reshape(-1, 2)
    return SubstrateNetwork(
        domain=[int(d) for d in domains],
        cpu_capacity=list(cpu),
        link_u=arr[:, 0],
        link_v=arr[:, 1],
        bw_capacity=[e[2] for e in edges],
        delay=[e[3] for e in edges],
    )
