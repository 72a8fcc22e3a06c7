import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sagin_vne.embedder import Embedding
from sagin_vne.metrics import (
    CSV_COLUMNS, MetricsRecorder, MetricsSample, MetricsTimeSeries, acceptance_rate,
    embedding_cost, embedding_revenue, long_term_average_revenue, revenue_cost_ratio,
)
from sagin_vne.substrate import Domain
from sagin_vne.vnr import VNR, VirtualLink, VirtualNode

G = Domain.GROUND


def two_node(bw=4):
    return VNR(0, (VirtualNode(0, 10, G), VirtualNode(1, 5, G)), (VirtualLink((0, 1), bw, 50.0),))


def test_cost_three_hop_path():
    vnr = two_node()
    emb = Embedding(vnr, {0: 0, 1: 3}, {0: (0, 1, 2)})
    assert embedding_cost(vnr, emb) == 27
    assert embedding_revenue(vnr) == 19
    assert (emb.revenue, emb.cost) == (19, 27)


def test_one_hop_cost_equals_revenue():
    vnr = two_node()
    emb = Embedding(vnr, {0: 0, 1: 1}, {0: (0,)})
    assert emb.cost == emb.revenue


def test_linkless_cost_is_cpu():
    vnr = VNR(0, (VirtualNode(0, 7, G),), ())
    emb = Embedding(vnr, {0: 0}, {})
    assert emb.cost == emb.revenue == 7


def test_empty_revenue():
    class Empty:
        vnodes = ()
        vlinks = ()
    assert embedding_revenue(Empty()) == 0


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 20), st.integers(1, 6)), max_size=8), st.integers(1, 20))
def test_revenue_never_exceeds_cost(links, cpu):
    total_rev = cpu + sum(bw for bw, _ in links)
    total_cost = cpu + sum(bw * hops for bw, hops in links)
    assert total_rev <= total_cost
    s = MetricsSample(100.0, total_rev, total_cost, 1, 1)
    assert 0 < s.rc_ratio <= 1


def test_single_accepted_vnr_indicators():
    rec = MetricsRecorder(100.0)
    rec.advance(40.0)
    rec.arrival(True, 19, 27)
    series = rec.finish(40.0)
    assert len(series) == 1 and series.final.time == 100.0
    assert long_term_average_revenue(series) == pytest.approx(0.19)
    assert revenue_cost_ratio(series) == pytest.approx(19 / 27)
    assert revenue_cost_ratio(series) == pytest.approx(0.7037, abs=1e-4)
    assert acceptance_rate(series) == 1.0


def test_no_arrival_conventions():
    series = MetricsTimeSeries()
    assert (long_term_average_revenue(series), revenue_cost_ratio(series), acceptance_rate(series)) == (0, 1, 1)
    s = MetricsSample(100.0, 0.0, 0.0, 0, 0)
    assert (s.avg_revenue, s.rc_ratio, s.acceptance) == (0, 1, 1)


def test_recorder_samples_every_interval():
    rec = MetricsRecorder(100.0)
    for t, ok in [(50, True), (150, False), (420, True)]:
        rec.advance(t)
        rec.arrival(ok, 10, 20)
    series = rec.finish(420)
    assert [s.time for s in series.samples] == [100, 200, 300, 400, 500]
    assert [s.arrived for s in series.samples] == [1, 2, 2, 2, 3]
    assert [s.accepted for s in series.samples] == [1, 1, 1, 1, 2]


def test_arrival_on_boundary_counts_in_that_sample():
    rec = MetricsRecorder(100.0)
    rec.advance(100.0)
    rec.arrival(True, 1, 1)
    series = rec.finish(100.0)
    assert [(s.time, s.arrived) for s in series.samples] == [(100.0, 1)]


def test_series_rejects_bad_samples():
    series = MetricsTimeSeries()
    series.append(MetricsSample(100, 5, 5, 2, 1))
    with pytest.raises(ValueError):
        series.append(MetricsSample(100, 5, 5, 2, 1))
    with pytest.raises(ValueError):
        series.append(MetricsSample(200, 4, 5, 2, 1))
    with pytest.raises(ValueError):
        series.append(MetricsSample(200, 5, 5, 2, 3))
    with pytest.raises(ValueError):
        MetricsRecorder(0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(0.1, 50), st.booleans(), st.integers(1, 40), st.integers(0, 5)),
                max_size=40))
def test_recorder_prefix_monotone_and_csv_round_trip(events):
    rec = MetricsRecorder(100.0)
    t = 0.0
    for gap, ok, rev, extra in events:
        t += gap
        rec.advance(t)
        rec.arrival(ok, rev, rev + extra)
    series = rec.finish(t)
    times = [s.time for s in series.samples]
    assert times == sorted(set(times))
    for a, b in zip(series.samples, series.samples[1:]):
        assert b.cumulative_revenue >= a.cumulative_revenue
        assert b.arrived >= a.arrived
    text = series.to_csv()
    assert text.splitlines()[0] == ",".join(CSV_COLUMNS)
    back = MetricsTimeSeries.from_csv(text)
    assert back.to_csv() == text
    for row, s in zip(text.splitlines()[1:], back.samples):
        vals = [float(x) for x in row.split(",")]
        assert vals[5:] == [s.avg_revenue, s.rc_ratio, s.acceptance]


def test_csv_header_checked():
    with pytest.raises(ValueError):
        MetricsTimeSeries.from_csv("a,b\n")
