"""Small hand-built instances used by tests and the CLI demos."""

from __future__ import annotations

from .substrate import Domain, SubstrateNetwork, from_edges
from .vnr import VNR, VirtualLink, VirtualNode

S, A, G = Domain.SPACE, Domain.AIR, Domain.GROUND

# satellites A, B; aerial C, D; ground E, F, G
SEGMENT_NODE_NAMES = ("A", "B", "C", "D", "E", "F", "G")


def three_segment_instance() -> tuple[SubstrateNetwork, VNR]:
    """Three-segment example with one feasible placement: a->B, b->D, c->G.

    Placing a on A, b on C, c on F fails: every route out of A toward the air
    and ground segments is slower than the 30 ms the virtual links allow.
    """
    net = from_edges(
        [S, S, A, A, G, G, G],
        [30, 35, 25, 30, 60, 70, 80],
        [
            (0, 1, 60, 25.0),  # A-B
            (2, 3, 70, 15.0),  # C-D
            (4, 5, 80, 5.0),   # E-F
            (5, 6, 80, 6.0),   # F-G
            (4, 6, 90, 8.0),   # E-G
            (0, 2, 60, 50.0),  # A-C inter-domain
            (0, 5, 70, 55.0),  # A-F inter-domain
            (1, 3, 80, 20.0),  # B-D inter-domain
            (1, 6, 90, 25.0),  # B-G inter-domain
        ],
    )
    vnr = VNR(
        0,
        (VirtualNode(0, 20, S), VirtualNode(1, 15, A), VirtualNode(2, 30, G)),
        (
            VirtualLink((0, 1), 10, 30.0),
            VirtualLink((0, 2), 15, 30.0),
            VirtualLink((1, 2), 5, 50.0),
        ),
        arrival_time=0.0,
        lifetime=10.0,
    )
    return net, vnr


def fixed_selector(assignment: dict[int, int]):
    """Selector that places each virtual node on a predetermined substrate node."""

    def select(net, vnr, vnode, candidates, used):
        return assignment[vnode.id]

    return select
