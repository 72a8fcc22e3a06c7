"""Command-line entry point: ``sagin-vne {generate,train,test,compare,oracle}``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from . import harness
from .embedder import validate_embedding
from .features import FEATURE_NAMES, extract_feature_matrix
from .oracle import brute_force_feasible
from .policy import PolicyParams
from .substrate import generate_substrate, load_substrate, save_substrate
from .vnr import generate_vnr_set, load_vnrs, save_vnrs

log = logging.getLogger("sagin_vne")

# config keys listed in --help; every other key is accepted as a flag too
DOCUMENTED = {
    "seed": "run seed",
    "delay_cap": "test-set delay cap (ms)",
    "epochs": "training epochs",
    "learning_rate": "policy learning rate",
    "sweep_caps": "comma-separated test caps for compare",
}


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="key = value configuration file")
    p.add_argument("--out-dir", type=Path, default=Path("out"))
    p.add_argument("--substrate-file", type=Path)
    p.add_argument("--vnr-file", type=Path)
    p.add_argument("--algorithm", choices=harness.ALGORITHMS, default="drl")
    p.add_argument("--save-policy", type=Path)
    p.add_argument("--load-policy", type=Path)
    p.add_argument("--trace-embeddings", type=Path, help="write one line per VNR outcome")
    p.add_argument("--dump-features", type=Path, help="write the initial feature matrix as CSV")
    p.add_argument("--no-plots", action="store_true")
    p.add_argument("-v", "--verbose", action="store_true")
    seen = set()
    for key in harness.config_keys():
        flag = "--" + key.replace("_", "-")
        if flag in seen:
            continue
        seen.add(flag)
        p.add_argument(flag, dest=f"cfg_{key}", metavar="VALUE",
                       help=DOCUMENTED.get(key, argparse.SUPPRESS))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sagin-vne", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("generate", "write substrate and VNR fixtures"),
        ("train", "train the placement policy"),
        ("test", "run the test set with one algorithm"),
        ("compare", "train, then test drl, nrm and rcr on shared fixtures"),
        ("oracle", "exhaustively decide feasibility of tiny instances"),
    ):
        p = sub.add_parser(name, help=help_)
        _add_common(p)
        if name == "oracle":
            p.add_argument("--vnr-id", type=int, help="check only this VNR")
    return parser


def load_config(args) -> harness.SimulationConfig:
    cfg = harness.SimulationConfig()
    if args.config:
        cfg = harness.loads_config(args.config.read_text(), cfg)
    overrides = {
        key: getattr(args, f"cfg_{key}")
        for key in harness.config_keys()
        if getattr(args, f"cfg_{key}", None) is not None
    }
    cfg = harness.apply_overrides(cfg, overrides)
    cfg.validate()
    return cfg


def _fixtures(cfg, args, delay_cap=None, net=None):
    if net is None and args.substrate_file:
        net = load_substrate(args.substrate_file)
    vnrs = load_vnrs(args.vnr_file) if args.vnr_file else None
    return harness.build_fixtures(cfg, delay_cap, net=net, vnrs=vnrs)


def _dump_features(net, path: Path) -> None:
    m = extract_feature_matrix(net)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("node",) + FEATURE_NAMES)
        for i, row in enumerate(m):
            w.writerow([i] + [repr(float(x)) for x in row])


def _params(cfg, args) -> PolicyParams | None:
    if args.load_policy:
        return PolicyParams.load(args.load_policy, cfg.learning_rate)
    return None


def cmd_generate(cfg, args) -> int:
    rs, rv, _, _ = cfg.streams()
    net = load_substrate(args.substrate_file) if args.substrate_file else generate_substrate(cfg.substrate, rs)
    vnrs = generate_vnr_set(cfg.vnr_config(cfg.vnr.delay_cap), rv)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    save_substrate(net, args.out_dir / "substrate.txt")
    save_vnrs(vnrs, args.out_dir / "vnrs.txt")
    if args.dump_features:
        _dump_features(net, args.dump_features)
    print(f"wrote {net.num_nodes} nodes, {net.num_links} links, {len(vnrs)} VNRs to {args.out_dir}")
    return 0


def cmd_train(cfg, args) -> int:
    fx = _fixtures(cfg, args)
    if args.dump_features:
        _dump_features(fx.net, args.dump_features)
    result = harness.train(cfg, fx, _params(cfg, args))
    args.out_dir.mkdir(parents=True, exist_ok=True)
    (args.out_dir / "training.csv").write_text(result.curves_csv())
    policy_path = args.save_policy or args.out_dir / "policy.txt"
    result.params.save(policy_path)
    if not args.no_plots:
        harness.emit_plots(harness.RunReport(cfg, result, {}), args.out_dir)
    w = result.params.as_vector()
    print(f"trained {cfg.epochs} epochs; policy {' '.join(f'{x:.4f}' for x in w)} -> {policy_path}")
    return 0


def cmd_test(cfg, args) -> int:
    fx = _fixtures(cfg, args)
    if args.dump_features:
        _dump_features(fx.net, args.dump_features)
    params = _params(cfg, args)
    if args.algorithm == "drl" and params is None:
        raise SystemExit("test --algorithm drl needs --load-policy")
    trace = args.trace_embeddings.open("w") if args.trace_embeddings else None
    try:
        series = harness.test(cfg, params, args.algorithm, fx, trace)
    finally:
        if trace:
            trace.close()
    args.out_dir.mkdir(parents=True, exist_ok=True)
    path = args.out_dir / harness.series_filename(args.algorithm, cfg.vnr.delay_cap)
    series.write_csv(path)
    f = series.final
    print(f"{args.algorithm}: avg revenue {f.avg_revenue:.4f}  acceptance {f.acceptance:.4f}  "
          f"r/c {f.rc_ratio:.4f} -> {path}")
    return 0


def cmd_compare(cfg, args) -> int:
    net = load_substrate(args.substrate_file) if args.substrate_file else None
    if args.vnr_file:
        raise SystemExit("compare draws its own request sets; use train/test with --vnr-file")
    report = harness.compare(cfg, params=_params(cfg, args), net=net)
    report.write(args.out_dir)
    if args.save_policy and report.training:
        report.training.params.save(args.save_policy)
    if not args.no_plots:
        harness.emit_plots(report, args.out_dir)
    for row in report.summary():
        print(f"{row[0]:>4} cap {row[1]:g} ms: avg revenue {row[2]:.4f}  acceptance {row[3]:.4f}  r/c {row[4]:.4f}")
    return 0


def cmd_oracle(cfg, args) -> int:
    if not (args.substrate_file and args.vnr_file):
        raise SystemExit("oracle needs --substrate-file and --vnr-file")
    net = load_substrate(args.substrate_file)
    vnrs = load_vnrs(args.vnr_file)
    if args.vnr_id is not None:
        vnrs = [v for v in vnrs if v.id == args.vnr_id]
    for vnr in vnrs:
        emb = brute_force_feasible(net, vnr)
        if emb is None:
            print(f"vnr {vnr.id}: INFEASIBLE")
            continue
        assert not validate_embedding(net, vnr, emb)
        print(f"vnr {vnr.id}: FEASIBLE {harness.format_trace(vnr, emb, None).split(' ', 2)[2]}")
    return 0


COMMANDS = {
    "generate": cmd_generate,
    "train": cmd_train,
    "test": cmd_test,
    "compare": cmd_compare,
    "oracle": cmd_oracle,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args)
        return COMMANDS[args.command](cfg, args)
    except (ValueError, OSError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
