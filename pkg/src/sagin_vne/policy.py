"""Linear-softmax placement policy and its REINFORCE update.

Scoring runs in five stages: the feature matrix comes in (extraction), each
row is scored as ``w . v + b`` (convolution), scores go through a softmax over
all nodes (probabilistic), infeasible nodes are zeroed and the rest
renormalized (filtering), and one node is picked (output).
"""

from __future__ import annotations

from collections.abc import Collection, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

# summed batch gradients are small (rewards <= 1, few accepted requests), so the step is large
DEFAULT_LEARNING_RATE = 0.2


class NoCandidates(ValueError):
    pass


class NonFiniteGradient(FloatingPointError):
    pass


@dataclass
class PolicyParams:
    weights: np.ndarray
    bias: float = 0.0
    learning_rate: float = DEFAULT_LEARNING_RATE

    def __post_init__(self):
        self.weights = np.array(self.weights, dtype=float).reshape(4)
        self.bias = float(self.bias)
        if not (np.all(np.isfinite(self.weights)) and np.isfinite(self.bias)):
            raise ValueError("policy parameters must be finite")
        if not self.learning_rate >= 0:
            raise ValueError("learning rate must be non-negative")

    @classmethod
    def random(cls, rng: np.random.Generator, learning_rate: float = DEFAULT_LEARNING_RATE,
               scale: float = 0.1) -> "PolicyParams":
        w = rng.uniform(-scale, scale, size=4)
        b = rng.uniform(-scale, scale)
        return cls(w, b, learning_rate)

    def copy(self) -> "PolicyParams":
        return PolicyParams(self.weights.copy(), self.bias, self.learning_rate)

    def as_vector(self) -> np.ndarray:
        return np.append(self.weights, self.bias)

    def dumps(self) -> str:
        return " ".join(repr(float(x)) for x in self.as_vector()) + "\n"

    @classmethod
    def loads(cls, text: str, learning_rate: float = DEFAULT_LEARNING_RATE) -> "PolicyParams":
        parts = text.split()
        if len(parts) != 5:
            raise ValueError("policy record must hold five numbers: w1 w2 w3 w4 b")
        vals = [float(p) for p in parts]
        return cls(vals[:4], vals[4], learning_rate)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path: str | Path, learning_rate: float = DEFAULT_LEARNING_RATE) -> "PolicyParams":
        return cls.loads(Path(path).read_text(), learning_rate)


@dataclass
class NodeDistribution:
    probs: np.ndarray
    candidate_mask: np.ndarray
    scores: np.ndarray | None = None
    # softmax over all rows, before filtering
    unfiltered: np.ndarray | None = None


def _as_mask(candidates, n: int) -> np.ndarray:
    arr = np.asarray(candidates)
    if arr.dtype == bool and arr.shape == (n,):
        return arr.copy()
    mask = np.zeros(n, dtype=bool)
    if arr.size:
        mask[arr.astype(np.int64).ravel()] = True
    return mask


def scores(params: PolicyParams, matrix: np.ndarray) -> np.ndarray:
    return matrix @ params.weights + params.bias


def softmax(x: np.ndarray) -> np.ndarray:
    z = np.exp(x - x.max())
    return z / z.sum()


def forward(params: PolicyParams, matrix: np.ndarray,
            candidates: Collection[int] | np.ndarray) -> NodeDistribution:
    """Distribution over substrate nodes restricted to ``candidates``.

    ``candidates`` is a collection of node ids or a boolean mask over rows.
    """
    matrix = np.asarray(matrix, dtype=float)
    n = matrix.shape[0]
    mask = _as_mask(candidates, n)
    if not mask.any():
        raise NoCandidates("no feasible substrate node")
    arv = scores(params, matrix)
    unfiltered = softmax(arv)
    # filtering + renormalization equals a softmax over the candidate rows;
    # computing it directly avoids 0/0 when all candidate mass underflows
    probs = np.zeros(n)
    probs[mask] = softmax(arv[mask])
    return NodeDistribution(probs, mask, arv, unfiltered)


def select_node(dist: NodeDistribution, mode: str = "greedy",
                rng: np.random.Generator | None = None) -> int:
    if mode == "greedy":
        # np.argmax returns the first maximum, i.e. the lowest id on ties
        masked = np.where(dist.candidate_mask, dist.probs, -1.0)
        return int(np.argmax(masked))
    if mode == "sample":
        if rng is None:
            raise ValueError("sample mode needs a random generator")
        cand = np.flatnonzero(dist.candidate_mask)
        p = dist.probs[cand]
        cdf = np.cumsum(p)
        k = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
        return int(cand[min(k, len(cand) - 1)])
    raise ValueError(f"unknown selection mode {mode!r}")


@dataclass
class Decision:
    matrix: np.ndarray
    candidate_mask: np.ndarray
    chosen: int
    log_prob: float


@dataclass
class EpisodeTrace:
    decisions: list[Decision] = field(default_factory=list)
    reward: float = 0.0
    success: bool = False


def log_prob_gradient(params: PolicyParams, matrix: np.ndarray, mask: np.ndarray,
                      chosen: int) -> tuple[np.ndarray, float]:
    """Gradient of ``log p(chosen)`` with respect to ``(weights, bias)``."""
    p = forward(params, matrix, mask).probs
    gw = matrix[chosen] - p @ matrix
    gb = 1.0 - p.sum()
    return gw, gb


def compute_reward(revenue: float, cost: float, success: bool = True) -> float:
    if not success:
        return 0.0
    if cost <= 0:
        raise ValueError("cost must be positive")
    return revenue / cost


def policy_gradient(params: PolicyParams, traces: Sequence[EpisodeTrace]) -> np.ndarray:
    """Summed ``reward * grad log p`` over all decisions of successful episodes."""
    grad = np.zeros(5)
    # non-finite values are reported by the caller, not warned about here
    with np.errstate(invalid="ignore", over="ignore"):
        for tr in traces:
            if not tr.success or tr.reward == 0:
                continue
            for d in tr.decisions:
                gw, gb = log_prob_gradient(params, d.matrix, d.candidate_mask, d.chosen)
                grad[:4] += tr.reward * gw
                grad[4] += tr.reward * gb
    return grad


def reinforce_update(params: PolicyParams, traces: Sequence[EpisodeTrace]) -> PolicyParams:
    if not traces:
        raise ValueError("empty batch")
    grad = policy_gradient(params, traces)
    if not np.all(np.isfinite(grad)):
        raise NonFiniteGradient(f"non-finite policy gradient {grad}")
    step = params.learning_rate * grad
    new = params.as_vector() + step
    if not np.all(np.isfinite(new)):
        raise NonFiniteGradient("update produced non-finite parameters")
    return PolicyParams(new[:4], new[4], params.learning_rate)
