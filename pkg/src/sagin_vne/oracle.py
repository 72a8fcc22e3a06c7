"""Exhaustive feasibility check for tiny instances."""

from __future__ import annotations

from collections.abc import Collection

from .embedder import Embedding
from .substrate import SubstrateNetwork
from .vnr import VNR

MAX_SUBSTRATE_NODES = 10
MAX_VIRTUAL_NODES = 4


class InstanceTooLarge(ValueError):
    pass


def _simple_paths(net: SubstrateNetwork, src: int, dst: int, bw: float, budget: float) -> list[tuple[int, ...]]:
    """Every simple path whose links each carry ``bw`` and whose delay fits ``budget``."""
    found = []

    def walk(u, visited, path, delay):
        if u == dst:
            found.append(tuple(path))
            return
        for v, lid in net.adjacency[u]:
            if v in visited or net.bw_available[lid] < bw:
                continue
            d = delay + net.delay[lid]
            if d > budget:
                continue
            visited.add(v)
            path.append(lid)
            walk(v, visited, path, d)
            path.pop()
            visited.discard(v)

    walk(src, {src}, [], 0.0)
    return found


def brute_force_feasible(net: SubstrateNetwork, vnr: VNR,
                         allowed: Collection[int] | None = None) -> Embedding | None:
    """Return a witness embedding if one exists, else None. The ledger is not touched.

    ``allowed`` optionally restricts which substrate nodes may host virtual nodes.
    """
    if net.num_nodes > MAX_SUBSTRATE_NODES or len(vnr.vnodes) > MAX_VIRTUAL_NODES:
        raise InstanceTooLarge(
            f"oracle handles at most {MAX_SUBSTRATE_NODES} substrate and "
            f"{MAX_VIRTUAL_NODES} virtual nodes"
        )
    allowed = set(range(net.num_nodes)) if allowed is None else set(allowed)
    options = []
    for vn in vnr.vnodes:
        opts = [
            p for p in range(net.num_nodes)
            if p in allowed and net.domain[p] == int(vn.target_domain)
            and net.cpu_available[p] >= vn.cpu_demand
        ]
        options.append(opts)

    def assignments(k, used, current):
        if k == len(vnr.vnodes):
            yield dict(current)
            return
        for p in options[k]:
            if p in used:
                continue
            used.add(p)
            current[k] = p
            yield from assignments(k + 1, used, current)
            del current[k]
            used.discard(p)

    for node_map in assignments(0, set(), {}):
        candidates = []
        for vl in vnr.vlinks:
            a, b = vl.endpoints
            candidates.append(_simple_paths(net, node_map[a], node_map[b], vl.bw_demand, vl.delay_bound))
        if any(not c for c in candidates):
            continue
        link_map = _route_jointly(net, vnr, candidates)
        if link_map is not None:
            return Embedding(vnr, node_map, link_map)
    return None


def _route_jointly(net, vnr, candidates):
    load: dict[int, float] = {}
    chosen: dict[int, tuple[int, ...]] = {}

    def place(i):
        if i == len(candidates):
            return True
        bw = vnr.vlinks[i].bw_demand
        for path in candidates[i]:
            if all(load.get(l, 0.0) + bw <= net.bw_available[l] for l in path):
                for l in path:
                    load[l] = load.get(l, 0.0) + bw
                chosen[i] = path
                if place(i + 1):
                    return True
                for l in path:
                    load[l] -= bw
                del chosen[i]
        return False

    return dict(chosen) if place(0) else None
