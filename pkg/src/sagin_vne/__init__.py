"""Multi-domain virtual network embedding over a space/air/ground substrate."""

from .substrate import Domain, SubstrateConfig, SubstrateNetwork, generate_substrate
from .vnr import VNR, VirtualLink, VirtualNode, VnrConfig, generate_vnr_set
from .policy import PolicyParams, forward, reinforce_update, select_node
from .embedder import Embedding, EmbeddingFailure, embed_vnr, validate_embedding
from .harness import SimulationConfig, compare, train

__all__ = [
    "Domain", "SubstrateConfig", "SubstrateNetwork", "generate_substrate",
    "VNR", "VirtualLink", "VirtualNode", "VnrConfig", "generate_vnr_set",
    "PolicyParams", "forward", "reinforce_update", "select_node",
    "Embedding", "EmbeddingFailure", "embed_vnr", "validate_embedding",
    "SimulationConfig", "compare", "train",
]
