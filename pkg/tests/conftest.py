import numpy as np
import pytest

from sagin_vne.substrate import Domain, SubstrateConfig, from_edges, generate_substrate
from sagin_vne.vnr import VNR, VirtualLink, VirtualNode


@pytest.fixture(scope="session")
def default_net():
    return generate_substrate(SubstrateConfig(), np.random.default_rng(42))


@pytest.fixture
def net(default_net):
    n = default_net.copy()
    n.reset()
    return n


def random_tiny_network(rng, n_nodes=None, link_prob=0.45):
    """Random 3-domain graph with at most 10 nodes, connected inside each domain."""
    n = int(rng.integers(4, 11)) if n_nodes is None else n_nodes
    domains = [Domain(i % 3) for i in range(n)]
    rng.shuffle(domains)
    edges = []
    seen = set()
    for d in Domain:
        members = [i for i in range(n) if domains[i] == d]
        for a, b in zip(members, members[1:]):
            seen.add((a, b))
            edges.append((a, b, int(rng.integers(5, 30)), float(rng.uniform(1, 15))))
    for a in range(n):
        for b in range(a + 1, n):
            if (a, b) not in seen and rng.random() < link_prob:
                edges.append((a, b, int(rng.integers(5, 30)), float(rng.uniform(1, 30))))
    cpu = [int(rng.integers(5, 30)) for _ in range(n)]
    return from_edges(domains, cpu, edges)


def random_tiny_vnr(rng, vid=0, max_nodes=4, max_delay=40.0):
    k = int(rng.integers(2, max_nodes + 1))
    nodes = tuple(VirtualNode(i, int(rng.integers(1, 15)), Domain(int(rng.integers(0, 3))))
                  for i in range(k))
    pairs = [(i, i + 1) for i in range(k - 1)]
    pairs += [(i, j) for i in range(k) for j in range(i + 2, k) if rng.random() < 0.4]
    links = tuple(VirtualLink(p, int(rng.integers(1, 12)), float(rng.uniform(5, max_delay)))
                  for p in pairs)
    return VNR(vid, nodes, links, arrival_time=0.0, lifetime=1.0)


# one status line per acceptance criterion, printed after the run
ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
