import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sagin_vne.policy import (
    Decision, EpisodeTrace, NoCandidates, NodeDistribution, NonFiniteGradient, PolicyParams,
    compute_reward, forward, log_prob_gradient, policy_gradient, reinforce_update, select_node,
)


def params(w=(0, 0, 0, 0), b=0.0, lr=0.1):
    return PolicyParams(np.array(w, dtype=float), float(b), lr)


def log_p_reference(vec, matrix, mask, chosen):
    """log of the filtered, renormalized softmax, computed from scratch."""
    arv = matrix @ vec[:4] + vec[4]
    cand = arv[mask]
    m = cand.max()
    return arv[chosen] - (m + math.log(np.exp(cand - m).sum()))


def test_zero_params_uniform():
    d = forward(params(), np.random.default_rng(0).random((4, 4)), [0, 1, 2, 3])
    assert d.probs.tolist() == pytest.approx([0.25] * 4)


def test_identical_rows_uniform_over_candidates():
    m = np.tile([0.3, 0.1, 0.9, 0.5], (5, 1))
    d = forward(params((3, -2, 1, 7), 0.4), m, [1, 3])
    assert d.probs.tolist() == pytest.approx([0, 0.5, 0, 0.5, 0])


def test_hand_evaluated_softmax():
    m = np.array([[0, 0, 0, 0], [1, 0, 0, 0]], dtype=float)
    d = forward(params((1, 0, 0, 0)), m, [0, 1])
    e = math.e
    assert d.probs[0] == pytest.approx(1 / (1 + e))
    assert d.probs[1] == pytest.approx(e / (1 + e))
    assert d.probs.tolist() == pytest.approx([0.2689, 0.7311], abs=1e-4)


def test_unfiltered_softmax_over_all_rows():
    m = np.eye(4)
    d = forward(params((1, 2, 3, 4)), m, [0])
    assert d.unfiltered.sum() == pytest.approx(1)
    assert d.probs.tolist() == [1.0, 0, 0, 0]


def test_empty_candidates_rejected():
    with pytest.raises(NoCandidates):
        forward(params(), np.zeros((3, 4)), [])


def test_boolean_mask_equivalent_to_ids():
    m = np.random.default_rng(1).random((6, 4))
    p = params((1, -1, 0.5, 2))
    a = forward(p, m, [0, 4, 5])
    b = forward(p, m, np.array([True, False, False, False, True, True]))
    assert np.array_equal(a.probs, b.probs)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 40), st.floats(-50, 50))
def test_softmax_contract(seed, n, shift):
    rng = np.random.default_rng(seed)
    m = rng.random((n, 4))
    mask = rng.random(n) < 0.5
    mask[rng.integers(n)] = True
    p = params(rng.normal(0, 20, 4), rng.normal())
    d = forward(p, m, mask)
    assert abs(d.probs.sum() - 1) <= 1e-9
    assert np.all(d.probs[~mask] == 0)
    # adding a constant to every logit leaves the distribution unchanged
    shifted = forward(params(p.weights, p.bias + shift), m, mask)
    assert np.allclose(d.probs, shifted.probs, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 20), st.floats(0.01, 100))
def test_greedy_matches_score_argmax(seed, n, scale):
    rng = np.random.default_rng(seed)
    m = rng.random((n, 4))
    mask = rng.random(n) < 0.6
    mask[0] = True
    p = params(rng.normal(size=4), rng.normal())
    chosen = select_node(forward(p, m, mask), "greedy")
    arv = np.where(mask, m @ p.weights + p.bias, -np.inf)
    assert chosen == int(np.argmax(arv))
    scaled = params(p.weights * scale, p.bias * scale)
    assert select_node(forward(scaled, m, mask), "greedy") == chosen


def _dist(probs):
    probs = np.array(probs, dtype=float)
    return NodeDistribution(probs, probs > 0)


def test_select_examples():
    assert select_node(_dist([0.9, 0.1]), "greedy") == 0
    assert select_node(_dist([0.5, 0.5]), "greedy") == 0
    one = _dist([0, 1.0, 0])
    assert select_node(one, "greedy") == 1
    assert select_node(one, "sample", np.random.default_rng(0)) == 1


def test_sample_frequencies():
    rng = np.random.default_rng(0)
    d = _dist([0.2, 0.0, 0.8])
    draws = [select_node(d, "sample", rng) for _ in range(4000)]
    assert 1 not in draws
    assert draws.count(2) / 4000 == pytest.approx(0.8, abs=0.03)


def test_select_errors():
    with pytest.raises(ValueError):
        select_node(_dist([1.0]), "sample")
    with pytest.raises(ValueError):
        select_node(_dist([1.0]), "argmax")


def test_reward():
    assert compute_reward(40, 100) == pytest.approx(0.4)
    assert compute_reward(40, 100, success=False) == 0
    # star VNR, every path one hop: cost equals revenue
    cpu, bw = [5, 3, 4], [2, 6]
    assert compute_reward(sum(cpu) + sum(bw), sum(cpu) + sum(b * 1 for b in bw)) == 1
    with pytest.raises(ValueError):
        compute_reward(1, 0)


def test_two_node_gradient_closed_form():
    m = np.array([[0.2, 0.4, 0.0, 1.0], [0.9, 0.1, 0.5, 0.3]])
    p = params((0.5, -0.3, 0.2, 0.1), 0.05)
    mask = np.array([True, True])
    gw, gb = log_prob_gradient(p, m, mask, 1)
    probs = forward(p, m, mask).probs
    assert np.allclose(gw, m[1] - probs @ m)
    assert gb == pytest.approx(0.0, abs=1e-15)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 30))
def test_gradient_matches_finite_differences(seed, n):
    rng = np.random.default_rng(seed)
    m = rng.random((n, 4))
    mask = rng.random(n) < 0.5
    mask[rng.integers(n)] = True
    chosen = int(rng.choice(np.flatnonzero(mask)))
    vec = rng.normal(0, 2, 5)
    p = params(vec[:4], vec[4])
    gw, gb = log_prob_gradient(p, m, mask, chosen)
    analytic = np.append(gw, gb)
    h = 1e-5
    numeric = np.empty(5)
    for k in range(5):
        e = np.zeros(5)
        e[k] = h
        numeric[k] = (log_p_reference(vec + e, m, mask, chosen)
                      - log_p_reference(vec - e, m, mask, chosen)) / (2 * h)
    err = np.linalg.norm(analytic - numeric) / max(np.linalg.norm(numeric), 1e-3)
    assert err < 1e-5


def _trace(p, m, mask, chosen, reward, success=True):
    d = forward(p, m, mask)
    return EpisodeTrace([Decision(m, mask, chosen, math.log(d.probs[chosen]))], reward, success)


def test_zero_reward_batch_unchanged():
    m = np.random.default_rng(2).random((3, 4))
    p = params((0.1, 0.2, 0.3, 0.4), 0.5)
    mask = np.ones(3, dtype=bool)
    out = reinforce_update(p, [_trace(p, m, mask, 0, 0.0), _trace(p, m, mask, 2, 0.0, False)])
    assert np.array_equal(out.as_vector(), p.as_vector())


def test_failed_traces_contribute_nothing():
    m = np.random.default_rng(3).random((3, 4))
    p = params((0.1, 0.2, 0.3, 0.4))
    mask = np.ones(3, dtype=bool)
    # a failed trace with a stale nonzero reward is still ignored
    assert np.all(policy_gradient(p, [_trace(p, m, mask, 1, 5.0, success=False)]) == 0)


def test_update_moves_toward_rewarded_choice():
    m = np.array([[0, 0, 0, 0], [1, 1, 1, 1]], dtype=float)
    p = params(lr=0.5)
    mask = np.ones(2, dtype=bool)
    out = reinforce_update(p, [_trace(p, m, mask, 1, 1.0)])
    assert forward(out, m, mask).probs[1] > 0.5
    assert np.allclose(out.weights, 0.5 * 0.5)


def test_learning_rate_zero_identity():
    m = np.random.default_rng(4).random((5, 4))
    p = params((1, 2, 3, 4), 1, lr=0.0)
    out = reinforce_update(p, [_trace(p, m, np.ones(5, dtype=bool), 3, 0.7)])
    assert np.array_equal(out.as_vector(), p.as_vector())


def test_non_finite_gradient_raises():
    m = np.array([[0, 0, 0, 0], [1, 0, 0, 0]], dtype=float)
    p = params()
    with pytest.raises(NonFiniteGradient):
        reinforce_update(p, [_trace(p, m, np.ones(2, dtype=bool), 1, float("inf"))])


def test_empty_batch_rejected():
    with pytest.raises(ValueError):
        reinforce_update(params(), [])


def test_params_text_round_trip(tmp_path):
    p = PolicyParams.random(np.random.default_rng(0))
    assert np.all(np.abs(p.as_vector()) <= 0.1)
    assert len(p.dumps().split()) == 5
    back = PolicyParams.loads(p.dumps())
    assert np.array_equal(back.as_vector(), p.as_vector())
    p.save(tmp_path / "p.txt")
    assert np.array_equal(PolicyParams.load(tmp_path / "p.txt").as_vector(), p.as_vector())
    with pytest.raises(ValueError):
        PolicyParams.loads("1 2 3")
    with pytest.raises(ValueError):
        PolicyParams.loads("1 2 3 nan 0")
