"""Virtual network requests and the arrival/departure event stream."""

from __future__ import annotations

import enum
import heapq
import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .substrate import Domain, Range, _check_range, _num


@dataclass(frozen=True)
class VirtualNode:
    id: int
    cpu_demand: float
    target_domain: Domain


@dataclass(frozen=True)
class VirtualLink:
    endpoints: tuple[int, int]
    bw_demand: float
    delay_bound: float


@dataclass(frozen=True)
class VNR:
    id: int
    vnodes: tuple[VirtualNode, ...]
    vlinks: tuple[VirtualLink, ...]
    arrival_time: float = 0.0
    lifetime: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "vnodes", tuple(self.vnodes))
        object.__setattr__(self, "vlinks", tuple(self.vlinks))
        for k, vn in enumerate(self.vnodes):
            if vn.id != k:
                raise ValueError("virtual node ids must be 0..k-1 in order")
            if vn.cpu_demand <= 0:
                raise ValueError("cpu_demand must be positive")
        seen = set()
        for vl in self.vlinks:
            a, b = vl.endpoints
            if a == b or not (0 <= a < len(self.vnodes) and 0 <= b < len(self.vnodes)):
                raise ValueError(f"bad virtual link endpoints {vl.endpoints}")
            key = (min(a, b), max(a, b))
            if key in seen:
                raise ValueError(f"duplicate virtual link {key}")
            seen.add(key)
            if vl.bw_demand <= 0 or vl.delay_bound <= 0:
                raise ValueError("bw_demand and delay_bound must be positive")
        if self.lifetime <= 0:
            raise ValueError("lifetime must be positive")

    @property
    def departure_time(self) -> float:
        return self.arrival_time + self.lifetime

    def is_connected(self) -> bool:
        if not self.vnodes:
            return True
        adj = {vn.id: [] for vn in self.vnodes}
        for vl in self.vlinks:
            a, b = vl.endpoints
            adj[a].append(b)
            adj[b].append(a)
        seen = {0}
        stack = [0]
        while stack:
            for w in adj[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == len(self.vnodes)


@dataclass(frozen=True)
class VnrConfig:
    count: int = 2000
    min_nodes: int = 2
    max_nodes: int = 10
    cpu_demand: Range = (1, 20)
    bw_demand: Range = (1, 20)
    delay_cap: float = 50.0
    min_delay: float = 1.0
    link_probability: float = 0.5
    arrival_rate: float = 0.04  # arrivals per time unit (4 per 100)
    mean_lifetime: float = 1000.0
    # relative odds of space/air/ground targets; None means uniform
    domain_weights: tuple[float, float, float] | None = (10.0, 30.0, 60.0)

    def validate(self) -> None:
        if self.count < 0:
            raise ValueError("count must be non-negative")
        if not 2 <= self.min_nodes <= self.max_nodes:
            raise ValueError("need 2 <= min_nodes <= max_nodes")
        _check_range(self.cpu_demand)
        _check_range(self.bw_demand)
        if self.cpu_demand[0] <= 0 or self.bw_demand[0] <= 0:
            raise ValueError("demands must be positive")
        if not 0 < self.min_delay <= self.delay_cap:
            raise ValueError("need 0 < min_delay <= delay_cap")
        if not 0 <= self.link_probability <= 1:
            raise ValueError("link_probability must lie in [0, 1]")
        if self.arrival_rate <= 0 or self.mean_lifetime <= 0:
            raise ValueError("arrival_rate and mean_lifetime must be positive")
        if self.domain_weights is not None:
            w = self.domain_weights
            if len(w) != 3 or min(w) < 0 or sum(w) <= 0:
                raise ValueError("domain_weights must be three non-negative numbers")


def generate_vnr_set(cfg: VnrConfig, rng: np.random.Generator) -> list[VNR]:
    """Draw ``cfg.count`` connected VNRs with Poisson arrivals.

    The number of random draws per VNR does not depend on ``delay_cap``: each
    delay bound is an affine image of one uniform variate, so two sets drawn with
    the same seed and different caps differ only in their delay bounds.
    """
    cfg.validate()
    weights = np.asarray(cfg.domain_weights or (1.0, 1.0, 1.0), dtype=float)
    weights = weights / weights.sum()
    vnrs = []
    t = 0.0
    for vid in range(cfg.count):
        t += rng.exponential(1.0 / cfg.arrival_rate)
        lifetime = rng.exponential(cfg.mean_lifetime)
        k = int(rng.integers(cfg.min_nodes, cfg.max_nodes, endpoint=True))
        cpu = rng.integers(int(cfg.cpu_demand[0]), int(cfg.cpu_demand[1]), size=k, endpoint=True)
        doms = rng.choice(3, size=k, p=weights)
        vnodes = [VirtualNode(i, float(cpu[i]), Domain(int(doms[i]))) for i in range(k)]

        order = rng.permutation(k).tolist()
        edges = set()
        for pos in range(1, k):
            parent = order[int(rng.integers(pos))]
            edges.add((min(order[pos], parent), max(order[pos], parent)))
        for pair in itertools.combinations(range(k), 2):
            coin = rng.random()
            if pair not in edges and coin < cfg.link_probability:
                edges.add(pair)
        edges = sorted(edges)
        bw = rng.integers(int(cfg.bw_demand[0]), int(cfg.bw_demand[1]), size=len(edges), endpoint=True)
        u = rng.random(len(edges))
        bounds = cfg.min_delay + u * (cfg.delay_cap - cfg.min_delay)
        vlinks = [VirtualLink(e, float(b), float(d)) for e, b, d in zip(edges, bw, bounds)]
        vnrs.append(VNR(vid, tuple(vnodes), tuple(vlinks), t, max(lifetime, 1e-9)))
    return vnrs


def split_sets(vnrs: Sequence[VNR], train_count: int) -> tuple[list[VNR], list[VNR]]:
    """Split into training and test sets; the test set's clock restarts at the split point."""
    train = list(vnrs[:train_count])
    rest = vnrs[train_count:]
    offset = train[-1].arrival_time if train else 0.0
    test = [
        VNR(v.id, v.vnodes, v.vlinks, v.arrival_time - offset, v.lifetime) for v in rest
    ]
    return train, test


class EventKind(enum.IntEnum):
    # departures sort first at equal times
    DEPARTURE = 0
    ARRIVAL = 1


@dataclass(frozen=True, order=True)
class Event:
    time: float
    kind: EventKind
    vnr_id: int


def build_event_stream(vnrs: Iterable[VNR], outcomes: Mapping[int, bool]) -> list[Event]:
    events = []
    for v in vnrs:
        events.append(Event(v.arrival_time, EventKind.ARRIVAL, v.id))
        if outcomes.get(v.id, False):
            events.append(Event(v.departure_time, EventKind.DEPARTURE, v.id))
    events.sort()
    return events


@dataclass
class EventQueue:
    """Time-ordered queue fed with arrivals up front and departures as VNRs are accepted."""

    _heap: list = field(default_factory=list)

    @classmethod
    def of_arrivals(cls, vnrs: Iterable[VNR]) -> "EventQueue":
        q = cls([Event(v.arrival_time, EventKind.ARRIVAL, v.id) for v in vnrs])
        heapq.heapify(q._heap)
        return q

    def push(self, event: Event) -> None:
        heapq.heappush(self._heap, event)

    def pop(self) -> Event:
        return heapq.heappop(self._heap)

    def __bool__(self) -> bool:
        return bool(self._heap)

    def __len__(self) -> int:
        return len(self._heap)


def dumps_vnrs(vnrs: Sequence[VNR]) -> str:
    lines = [f"vnrs {len(vnrs)}"]
    for v in vnrs:
        lines.append(
            f"vnr {v.id} {repr(float(v.arrival_time))} {repr(float(v.lifetime))} "
            f"nodes {len(v.vnodes)} links {len(v.vlinks)}"
        )
        for vn in v.vnodes:
            lines.append(f"vnode {vn.id} {vn.target_domain.name.lower()} {_num(vn.cpu_demand)}")
        for vl in v.vlinks:
            a, b = vl.endpoints
            lines.append(f"vlink {a} {b} {_num(vl.bw_demand)} {_num(vl.delay_bound)}")
    return "\n".join(lines) + "\n"


def loads_vnrs(text: str) -> list[VNR]:
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows or rows[0][0] != "vnrs" or len(rows[0]) != 2:
        raise ValueError("VNR file must start with 'vnrs <count>'")
    expected = int(rows[0][1])
    vnrs = []
    pos = 1
    while pos < len(rows):
        head = rows[pos]
        if head[0] != "vnr" or len(head) != 8 or head[4] != "nodes" or head[6] != "links":
            raise ValueError(f"expected vnr header, got: {' '.join(head)}")
        k, m = int(head[5]), int(head[7])
        body = rows[pos + 1 : pos + 1 + k + m]
        if len(body) != k + m:
            raise ValueError(f"truncated VNR {head[1]}")
        vnodes, vlinks = [], []
        for row in body[:k]:
            if row[0] != "vnode" or len(row) != 4:
                raise ValueError(f"expected vnode line, got: {' '.join(row)}")
            vnodes.append(VirtualNode(int(row[1]), float(row[3]), Domain.parse(row[2])))
        for row in body[k:]:
            if row[0] != "vlink" or len(row) != 5:
                raise ValueError(f"expected vlink line, got: {' '.join(row)}")
            vlinks.append(VirtualLink((int(row[1]), int(row[2])), float(row[3]), float(row[4])))
        vnrs.append(VNR(int(head[1]), tuple(vnodes), tuple(vlinks), float(head[2]), float(head[3])))
        pos += 1 + k + m
    if len(vnrs) != expected:
        raise ValueError(f"expected {expected} VNRs, found {len(vnrs)}")
    return vnrs


def save_vnrs(vnrs: Sequence[VNR], path: str | Path) -> None:
    Path(path).write_text(dumps_vnrs(vnrs))


def load_vnrs(path: str | Path) -> list[VNR]:
    return loads_vnrs(Path(path).read_text())
