"""Seeded simulation loop, training, testing and baseline comparison."""

from __future__ import annotations

import csv
import dataclasses
import io
import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baselines import nrm_vne_embed, rcr_vne_embed
from .embedder import Embedding, EmbeddingFailure, PolicySelector, embed_vnr
from .metrics import MetricsRecorder, MetricsTimeSeries
from .policy import DEFAULT_LEARNING_RATE, EpisodeTrace, PolicyParams, compute_reward, reinforce_update
from .substrate import Domain, SubstrateConfig, SubstrateNetwork, generate_substrate
from .vnr import VNR, Event, EventKind, EventQueue, VnrConfig, generate_vnr_set, split_sets

log = logging.getLogger(__name__)

ALGORITHMS = ("drl", "nrm", "rcr")
TRAINING_COLUMNS = ("epoch", "avg_revenue", "acceptance", "rc_ratio")
SUMMARY_COLUMNS = ("algorithm", "delay_cap", "avg_revenue", "acceptance", "rc_ratio", "cum_revenue")


@dataclass(frozen=True)
class SimulationConfig:
    substrate: SubstrateConfig = field(default_factory=SubstrateConfig)
    vnr: VnrConfig = field(default_factory=VnrConfig)
    train_count: int = 1000
    test_count: int = 1000
    # training requests always use this cap; vnr.delay_cap applies to the test set
    train_delay_cap: float = 50.0
    target_domains: str = "proportional"
    epochs: int = 50
    batch_size: int = 100
    learning_rate: float = DEFAULT_LEARNING_RATE
    period: float = 50_000.0
    sample_interval: float = 100.0
    sweep_caps: tuple[float, ...] = ()
    seed: int = 0

    def validate(self) -> None:
        self.substrate.validate()
        self.vnr_config(self.vnr.delay_cap).validate()
        if self.train_count < 0 or self.test_count < 0:
            raise ValueError("set sizes must be non-negative")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        if self.batch_size <= 0 or (self.train_count and self.batch_size > self.train_count):
            raise ValueError("batch size must be positive and at most the training-set size")
        if self.learning_rate < 0:
            raise ValueError("learning rate must be non-negative")
        if self.period <= 0 or self.sample_interval <= 0:
            raise ValueError("period and sample_interval must be positive")
        if self.target_domains not in ("proportional", "uniform"):
            raise ValueError("target_domains must be 'proportional' or 'uniform'")

    def vnr_config(self, delay_cap: float) -> VnrConfig:
        if self.target_domains == "uniform":
            weights = None
        else:
            weights = tuple(float(self.substrate.node_count(d)) for d in Domain)
        return dataclasses.replace(
            self.vnr,
            count=self.train_count + self.test_count,
            delay_cap=delay_cap,
            domain_weights=weights,
        )

    @property
    def caps(self) -> tuple[float, ...]:
        return tuple(self.sweep_caps) or (self.vnr.delay_cap,)

    def streams(self) -> list[np.random.Generator]:
        """Independent generators for substrate, requests, policy init and action sampling."""
        return [np.random.default_rng(s) for s in np.random.SeedSequence(self.seed).spawn(4)]


@dataclass
class Fixtures:
    net: SubstrateNetwork
    train: list[VNR]
    test: list[VNR]


def build_fixtures(cfg: SimulationConfig, delay_cap: float | None = None,
                   net: SubstrateNetwork | None = None,
                   vnrs: Sequence[VNR] | None = None) -> Fixtures:
    """Substrate plus train/test sets; the test set uses ``delay_cap`` (default ``cfg.vnr.delay_cap``).

    Training requests come from a draw at ``cfg.train_delay_cap``; test requests
    from a same-seed draw at the test cap, so caps change delay bounds only.
    """
    cfg.validate()
    rs, rv, _, _ = cfg.streams()
    if net is None:
        net = generate_substrate(cfg.substrate, rs)
    if vnrs is not None:
        train, test = split_sets(vnrs, cfg.train_count)
        return Fixtures(net, train, test)
    cap = cfg.vnr.delay_cap if delay_cap is None else delay_cap
    state = rv.bit_generator.state
    train, _ = split_sets(generate_vnr_set(cfg.vnr_config(cfg.train_delay_cap), rv), cfg.train_count)
    rv.bit_generator.state = state
    _, test = split_sets(generate_vnr_set(cfg.vnr_config(cap), rv), cfg.train_count)
    if test and test[-1].arrival_time > cfg.period:
        log.warning("test arrivals run past the reconstruction period (%.0f > %.0f)",
                    test[-1].arrival_time, cfg.period)
    return Fixtures(net, train, test)


EmbedFn = Callable[[SubstrateNetwork, VNR], Embedding]


def simulate(net: SubstrateNetwork, vnrs: Sequence[VNR], embed: EmbedFn,
             interval: float = 100.0,
             on_arrival: Callable[[VNR, Embedding | None, EmbeddingFailure | None], None] | None = None,
             ) -> tuple[MetricsTimeSeries, dict[int, bool]]:
    """Replay arrivals and departures against ``net``.

    Departures release their embedding, so once the queue drains every ledger is
    back at capacity. Sampling ends at the boundary covering the last arrival.
    """
    by_id = {v.id: v for v in vnrs}
    queue = EventQueue.of_arrivals(vnrs)
    recorder = MetricsRecorder(interval)
    outcomes: dict[int, bool] = {}
    held: dict[int, Embedding] = {}
    last_arrival = 0.0
    while queue:
        ev = queue.pop()
        if ev.kind is EventKind.DEPARTURE:
            net.release_embedding(held.pop(ev.vnr_id))
            continue
        recorder.advance(ev.time)
        last_arrival = ev.time
        vnr = by_id[ev.vnr_id]
        try:
            emb = embed(net, vnr)
        except EmbeddingFailure as exc:
            outcomes[vnr.id] = False
            recorder.arrival(False)
            if on_arrival:
                on_arrival(vnr, None, exc)
            continue
        outcomes[vnr.id] = True
        held[vnr.id] = emb
        recorder.arrival(True, emb.revenue, emb.cost)
        queue.push(Event(vnr.departure_time, EventKind.DEPARTURE, vnr.id))
        if on_arrival:
            on_arrival(vnr, emb, None)
    return recorder.finish(last_arrival), outcomes


@dataclass
class TrainingResult:
    params: PolicyParams
    initial: PolicyParams
    curves: list[tuple[int, float, float, float]]

    def curves_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRAINING_COLUMNS)
        for epoch, rev, acc, rc in self.curves:
            w.writerow([epoch, repr(rev), repr(acc), repr(rc)])
        return buf.getvalue()


def train(cfg: SimulationConfig, fixtures: Fixtures | None = None,
          params: PolicyParams | None = None) -> TrainingResult:
    """REINFORCE over the training set, ``cfg.epochs`` passes.

    Each epoch replays the training arrivals on a fresh ledger with sampled
    placements. Every VNR yields one trace; failed VNRs carry zero reward and so
    contribute no gradient. Parameters update after every ``cfg.batch_size``
    VNRs (and once more for a trailing partial batch).
    """
    fixtures = fixtures or build_fixtures(cfg)
    _, _, rp, ra = cfg.streams()
    if params is None:
        params = PolicyParams.random(rp, cfg.learning_rate)
    initial = params.copy()
    net = fixtures.net
    selector = PolicySelector(params, "sample", ra, record=True)
    batch: list[EpisodeTrace] = []
    curves = []

    def flush():
        nonlocal params
        if batch:
            params = reinforce_update(params, batch)
            selector.params = params
            batch.clear()

    def record(trace: EpisodeTrace):
        batch.append(trace)
        if len(batch) >= cfg.batch_size:
            flush()

    def embed(net_, vnr):
        selector.decisions = []
        try:
            emb = embed_vnr(net_, vnr, selector)
        except EmbeddingFailure:
            record(EpisodeTrace(selector.decisions, 0.0, False))
            raise
        record(EpisodeTrace(selector.decisions, compute_reward(emb.revenue, emb.cost), True))
        return emb

    for epoch in range(cfg.epochs):
        net.reset()
        series, _ = simulate(net, fixtures.train, embed, cfg.sample_interval)
        flush()
        f = series.final
        curves.append((epoch, f.avg_revenue, f.acceptance, f.rc_ratio))
        log.info("epoch %d: revenue %.3f acc %.3f r/c %.3f", epoch, *curves[-1][1:])
    net.reset()
    return TrainingResult(params, initial, curves)


def embedder_for(algorithm: str, params: PolicyParams | None = None) -> EmbedFn:
    if algorithm == "drl":
        if params is None:
            raise ValueError("drl needs policy parameters")
        selector = PolicySelector(params, "greedy")
        return lambda net, vnr: embed_vnr(net, vnr, selector)
    if algorithm == "nrm":
        return nrm_vne_embed
    if algorithm == "rcr":
        return rcr_vne_embed
    raise ValueError(f"unknown algorithm {algorithm!r}")


def test(cfg: SimulationConfig, params: PolicyParams | None, algorithm: str = "drl",
         fixtures: Fixtures | None = None, trace: io.TextIOBase | None = None) -> MetricsTimeSeries:
    """Replay the test set with greedy placement; deterministic given (cfg, params)."""
    fixtures = fixtures or build_fixtures(cfg)
    net = fixtures.net
    net.reset()
    hook = (lambda v, e, x: trace.write(format_trace(v, e, x) + "\n")) if trace else None
    series, _ = simulate(net, fixtures.test, embedder_for(algorithm, params), cfg.sample_interval, hook)
    return series


test.__test__ = False  # keep pytest from collecting this as a test


def format_trace(vnr: VNR, emb: Embedding | None, exc: Exception | None) -> str:
    if emb is None:
        return f"{vnr.id} rejected {exc}"
    nodes = ",".join(f"{k}:{v}" for k, v in sorted(emb.node_map.items()))
    paths = ";".join(f"{k}:{'-'.join(map(str, p))}" for k, p in sorted(emb.link_map.items()))
    return f"{vnr.id} accepted nodes={nodes} paths={paths} revenue={emb.revenue!r} cost={emb.cost!r}"


@dataclass
class RunReport:
    config: SimulationConfig
    training: TrainingResult | None
    series: dict[tuple[str, float], MetricsTimeSeries]

    def summary(self) -> list[tuple]:
        rows = []
        for (alg, cap), s in self.series.items():
            f = s.final
            rows.append((alg, cap, f.avg_revenue, f.acceptance, f.rc_ratio, f.cumulative_revenue))
        return rows

    def summary_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for row in self.summary():
            w.writerow([row[0]] + [repr(float(x)) for x in row[1:]])
        return buf.getvalue()

    def write(self, out_dir: str | Path) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        written = []
        if self.training is not None:
            written.append(_write(out / "training.csv", self.training.curves_csv()))
            written.append(_write(out / "policy.txt", self.training.params.dumps()))
        for (alg, cap), s in self.series.items():
            written.append(_write(out / series_filename(alg, cap), s.to_csv()))
        written.append(_write(out / "summary.csv", self.summary_csv()))
        written.append(_write(out / "config.txt", dumps_config(self.config)))
        return written


def series_filename(algorithm: str, cap: float) -> str:
    return f"test_{algorithm}_cap{float(cap):g}.csv"


def _write(path: Path, text: str) -> Path:
    path.write_text(text)
    return path


def compare(cfg: SimulationConfig, algorithms: Sequence[str] = ALGORITHMS,
            params: PolicyParams | None = None, net: SubstrateNetwork | None = None) -> RunReport:
    """Train once (unless ``params`` given), then test every algorithm at every cap on shared fixtures."""
    base = build_fixtures(cfg, net=net)
    training = None
    if "drl" in algorithms and params is None:
        training = train(cfg, base)
        params = training.params
    series = {}
    for cap in cfg.caps:
        fx = build_fixtures(cfg, cap, net=base.net)
        for alg in algorithms:
            series[(alg, float(cap))] = test(cfg, params, alg, fx)
    return RunReport(cfg, training, series)


def emit_plots(report: RunReport, out_dir: str | Path) -> list[Path]:
    """Render the training curves and test indicators as SVG files."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    meta = {"Date": None}
    written = []

    if report.training is not None and report.training.curves:
        curves = np.array(report.training.curves)
        fig, axes = plt.subplots(1, 3, figsize=(12, 3.5))
        for ax, col, title in zip(axes, (1, 2, 3), ("Average revenue", "Acceptance rate", "Revenue/cost")):
            ax.plot(curves[:, 0], curves[:, col])
            ax.set_xlabel("epoch")
            ax.set_title(title)
        fig.tight_layout()
        path = out / "training.svg"
        fig.savefig(path, metadata=meta)
        plt.close(fig)
        written.append(path)

    indicators = (("avg_revenue", "Long-term average revenue"), ("acceptance", "Acceptance rate"),
                  ("rc_ratio", "Long-term revenue/cost"))
    for attr, title in indicators:
        fig, ax = plt.subplots(figsize=(6, 4))
        for (alg, cap), s in report.series.items():
            if not s.samples:
                continue
            t = [x.time for x in s.samples]
            ax.plot(t, [getattr(x, attr) for x in s.samples], label=f"{alg} {cap:g} ms")
        ax.set_xlabel("time")
        ax.set_title(title)
        ax.legend(fontsize="small")
        fig.tight_layout()
        path = out / f"{attr}.svg"
        fig.savefig(path, metadata=meta)
        plt.close(fig)
        written.append(path)

    rows = report.summary()
    if rows:
        fig, axes = plt.subplots(1, 2, figsize=(9, 3.5))
        labels = [f"{r[0]}\n{r[1]:g} ms" for r in rows]
        axes[0].bar(labels, [r[5] for r in rows])
        axes[0].set_title("Cumulative revenue")
        axes[1].bar(labels, [r[3] for r in rows])
        axes[1].set_title("Acceptance rate")
        fig.tight_layout()
        path = out / "comparison.svg"
        fig.savefig(path, metadata=meta)
        plt.close(fig)
        written.append(path)
    return written


# -- flat key = value configuration ------------------------------------------

def config_keys() -> dict[str, tuple[str, type]]:
    """Map each flat key to (section, field type); section is '', 'substrate' or 'vnr'."""
    keys = {}
    for f in dataclasses.fields(SubstrateConfig):
        keys[f.name] = ("substrate", f.type)
    for f in dataclasses.fields(VnrConfig):
        if f.name in ("count", "domain_weights"):
            continue
        keys[f.name] = ("vnr", f.type)
    for f in dataclasses.fields(SimulationConfig):
        if f.name in ("substrate", "vnr"):
            continue
        keys[f.name] = ("", f.type)
    return keys


def _parse_value(raw: str, annotation) -> object:
    ann = str(annotation)
    raw = raw.strip()
    if "Range" in ann or "tuple" in ann:
        parts = [p for p in raw.replace(",", " ").split()]
        return tuple(float(p) for p in parts)
    if ann in ("int", "<class 'int'>"):
        return int(raw)
    if ann in ("float", "<class 'float'>"):
        return float(raw)
    return raw


def _format_value(value) -> str:
    if isinstance(value, tuple):
        return ",".join(_format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def apply_overrides(cfg: SimulationConfig, overrides: dict[str, str]) -> SimulationConfig:
    keys = config_keys()
    sub, vnr, top = {}, {}, {}
    for key, raw in overrides.items():
        if key not in keys:
            raise ValueError(f"unknown config key {key!r}")
        section, ann = keys[key]
        value = _parse_value(raw, ann)
        {"substrate": sub, "vnr": vnr, "": top}[section][key] = value
    return dataclasses.replace(
        cfg,
        substrate=dataclasses.replace(cfg.substrate, **sub),
        vnr=dataclasses.replace(cfg.vnr, **vnr),
        **top,
    )


def loads_config(text: str, base: SimulationConfig | None = None) -> SimulationConfig:
    overrides = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {n}: expected 'key = value'")
        key, value = line.split("=", 1)
        overrides[key.strip()] = value
    return apply_overrides(base or SimulationConfig(), overrides)


def dumps_config(cfg: SimulationConfig) -> str:
    lines = []
    for key, (section, _) in config_keys().items():
        obj = getattr(cfg, section) if section else cfg
        lines.append(f"{key} = {_format_value(getattr(obj, key))}")
    return "\n".join(lines) + "\n"
