"""Revenue, cost and the long-term evaluation indicators."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

CSV_COLUMNS = (
    "time", "cum_revenue", "cum_cost", "arrived", "accepted",
    "avg_revenue", "rc_ratio", "acceptance",
)


def embedding_revenue(vnr) -> float:
    return float(sum(vn.cpu_demand for vn in vnr.vnodes) + sum(vl.bw_demand for vl in vnr.vlinks))


def embedding_cost(vnr, emb) -> float:
    """CPU demands plus each link's bandwidth demand times its substrate hop count."""
    cpu = sum(vn.cpu_demand for vn in vnr.vnodes)
    bw = sum(vl.bw_demand * len(emb.link_map.get(i, ())) for i, vl in enumerate(vnr.vlinks))
    return float(cpu + bw)


@dataclass(frozen=True)
class MetricsSample:
    time: float
    cumulative_revenue: float
    cumulative_cost: float
    arrived: int
    accepted: int

    @property
    def avg_revenue(self) -> float:
        return self.cumulative_revenue / self.time if self.time > 0 else 0.0

    @property
    def rc_ratio(self) -> float:
        if self.cumulative_cost == 0:
            return 1.0
        return self.cumulative_revenue / self.cumulative_cost

    @property
    def acceptance(self) -> float:
        return self.accepted / self.arrived if self.arrived else 1.0

    def row(self) -> tuple:
        return (
            self.time, self.cumulative_revenue, self.cumulative_cost, self.arrived,
            self.accepted, self.avg_revenue, self.rc_ratio, self.acceptance,
        )


@dataclass
class MetricsTimeSeries:
    samples: list[MetricsSample] = field(default_factory=list)

    def append(self, sample: MetricsSample) -> None:
        if self.samples:
            last = self.samples[-1]
            if sample.time <= last.time:
                raise ValueError("sample times must increase strictly")
            if (sample.cumulative_revenue < last.cumulative_revenue
                    or sample.cumulative_cost < last.cumulative_cost
                    or sample.arrived < last.arrived or sample.accepted < last.accepted):
                raise ValueError("cumulative metrics must not decrease")
        if sample.accepted > sample.arrived:
            raise ValueError("accepted exceeds arrived")
        self.samples.append(sample)

    @property
    def final(self) -> MetricsSample:
        if not self.samples:
            return MetricsSample(0.0, 0.0, 0.0, 0, 0)
        return self.samples[-1]

    def __len__(self) -> int:
        return len(self.samples)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for s in self.samples:
            w.writerow([_fmt(x) for x in s.row()])
        return buf.getvalue()

    def write_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv())

    @classmethod
    def from_csv(cls, text: str) -> "MetricsTimeSeries":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or tuple(rows[0]) != CSV_COLUMNS:
            raise ValueError("unexpected CSV header")
        series = cls()
        for r in rows[1:]:
            series.append(MetricsSample(float(r[0]), float(r[1]), float(r[2]), int(r[3]), int(r[4])))
        return series


def _fmt(x) -> str:
    if isinstance(x, int):
        return str(x)
    return repr(float(x))


def long_term_average_revenue(series: MetricsTimeSeries) -> float:
    return series.final.avg_revenue


def revenue_cost_ratio(series: MetricsTimeSeries) -> float:
    return series.final.rc_ratio


def acceptance_rate(series: MetricsTimeSeries) -> float:
    return series.final.acceptance


class MetricsRecorder:
    """Accumulates arrivals and bookings, emitting a sample at every interval boundary."""

    def __init__(self, interval: float = 100.0):
        if interval <= 0:
            raise ValueError("interval must be positive")
        self.interval = interval
        self.series = MetricsTimeSeries()
        self.revenue = 0.0
        self.cost = 0.0
        self.arrived = 0
        self.accepted = 0
        self._k = 1

    @property
    def _next(self) -> float:
        return self._k * self.interval

    def advance(self, time: float) -> None:
        """Emit samples for every boundary strictly before ``time``."""
        while self._next < time:
            self._emit()

    def arrival(self, accepted: bool, revenue: float = 0.0, cost: float = 0.0) -> None:
        self.arrived += 1
        if accepted:
            self.accepted += 1
            self.revenue += revenue
            self.cost += cost

    def finish(self, until: float) -> MetricsTimeSeries:
        """Emit the remaining samples up to and including the boundary at or after ``until``."""
        self.advance(until)
        if not self.series.samples or self.series.samples[-1].time < until:
            self._emit()
        return self.series

    def _emit(self) -> None:
        self.series.append(
            MetricsSample(self._next, self.revenue, self.cost, self.arrived, self.accepted)
        )
        self._k += 1
