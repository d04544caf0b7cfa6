"""Experiment runner: dataset generation, training runs, sweeps, analysis.

Exit codes are a stable contract: 0 success, 2 configuration/validation
problems, 3 runtime I/O failures.  Files interrupted by an I/O failure are
renamed with a ``.partial`` suffix so downstream tooling never consumes a
half-written artifact.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import ConfigError, ExperimentConfig, SEED_ENV_VAR, parse_config_file
from .datagen import DataFormatError, make_dataset, save
from .model import HqcnnModel, RunLog, save_checkpoint, train
from .report import (
    compute_fdr,
    compute_stage_report,
    curve_metrics_or_none,
    metrics_payload,
    write_metrics,
    write_stage_files,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hqcnn",
        description="Hybrid quantum-classical CNN experiments on synthetic "
        "dependence-direction heatmaps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a synthetic dataset file")
    p.add_argument("--per-class", type=int, default=40, help="samples per class (>= 5)")
    p.add_argument("--seed", type=int, default=None, help=f"rng seed (falls back to ${SEED_ENV_VAR}, then 0)")
    p.add_argument("--out", required=True, help="output dataset path")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train one configuration into a run directory")
    p.add_argument("config", help="flat key = value config file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config entry (repeatable)")
    p.add_argument("--out", default=None, help="run directory (overrides out= in config)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="run several configs differing in one field")
    p.add_argument("configs", nargs="+", help="config files (>= 2)")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override applied to every config (repeatable)")
    p.add_argument("--out", required=True, help="sweep output directory")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("analyze", help="recompute curve metrics from a finished run")
    p.add_argument("run_dir", help="run directory (or a training_log.csv path)")
    p.add_argument("--json", action="store_true", help="emit JSON instead of key = value lines")
    p.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ConfigError, DataFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


def entrypoint() -> None:
    sys.exit(main())


def _resolve_seed(arg_seed: int | None) -> int:
    if arg_seed is not None:
        return arg_seed
    import os

    env = os.environ.get(SEED_ENV_VAR)
    return int(env) if env else 0


def cmd_gen_data(args) -> int:
    if args.per_class < 5:
        print(f"error: --per-class must be >= 5, got {args.per_class}", file=sys.stderr)
        return 2
    seed = _resolve_seed(args.seed)
    dataset = make_dataset(args.per_class, seed=seed)
    out = Path(args.out)
    if out.parent and not out.parent.exists():
        out.parent.mkdir(parents=True, exist_ok=True)
    save(dataset, out)
    print(f"wrote {len(dataset.heatmaps)} samples to {out} (seed {seed})")
    return 0


def _run_experiment(cfg: ExperimentConfig) -> int:
    """Train one config and populate its run directory."""
    dataset = cfg.resolve_dataset()
    run_dir = Path(cfg.out)
    run_dir.mkdir(parents=True, exist_ok=True)
    model = HqcnnModel(
        cfg.feature_map,
        n_qubits=cfg.n_qubits,
        ansatz_reps=cfg.ansatz_reps,
        observables=cfg.observables,
        seed=cfg.seed,
    )
    log = train(
        model,
        dataset,
        epochs=cfg.epochs,
        batch_size=cfg.batch,
        lr=cfg.lr,
        momentum=cfg.momentum,
        weight_decay=cfg.weight_decay,
        seed=cfg.seed,
    )
    log.config = cfg.echo()
    return _write_run_outputs(run_dir, cfg, model, dataset, log)


def _write_run_outputs(run_dir: Path, cfg, model, dataset, log: RunLog) -> int:
    from . import plotting  # deferred: pulls in matplotlib

    written: list[Path] = []

    def target(name: str) -> Path:
        path = run_dir / name
        written.append(path)
        return path

    try:
        log.to_csv(target("training_log.csv"))
        save_checkpoint(model, target("model.ckpt"))
        stage_report = compute_stage_report(model, dataset)
        payload = metrics_payload(
            log,
            curve_metrics_or_none(log),
            stage_report,
            compute_fdr(stage_report),
            cfg.echo(),
        )
        target("metrics.json")
        target("metrics.txt")
        write_metrics(payload, run_dir)
        written.extend(write_stage_files(stage_report, run_dir))
        plotting.save_training_curves(log, target("training_curves.svg"))
        plotting.save_stage_scatter(stage_report, target("stage_pca.svg"))
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        for path in written:
            if path.exists():
                path.rename(path.with_name(path.name + ".partial"))
        return 3
    return 0


def cmd_train(args) -> int:
    cfg = parse_config_file(args.config, args.set)
    if args.out:
        cfg.out = args.out
    if not cfg.out:
        raise ConfigError("no output directory: set out= in the config or pass --out")
    return _run_experiment(cfg)


def cmd_sweep(args) -> int:
    if len(args.configs) < 2:
        print("error: sweep needs at least 2 configs", file=sys.stderr)
        return 2
    cfgs = [parse_config_file(path, args.set) for path in args.configs]
    fields = [cfg.sweep_fields() for cfg in cfgs]
    differing = sorted(
        key for key in fields[0] if len({repr(f[key]) for f in fields}) > 1
    )
    if len(differing) != 1:
        print(
            "error: sweep configs must differ in exactly one field, "
            f"found differing fields: {differing or 'none'}",
            file=sys.stderr,
        )
        return 2
    swept = differing[0]
    out_root = Path(args.out)
    out_root.mkdir(parents=True, exist_ok=True)

    rows = []
    for i, cfg in enumerate(cfgs):
        cfg.out = str(out_root / f"run_{i:02d}")
        code = _run_experiment(cfg)
        if code != 0:
            return code
        with open(Path(cfg.out) / "metrics.json", "r", encoding="ascii") as fh:
            payload = json.load(fh)
        rows.append(
            {
                "run": f"run_{i:02d}",
                "swept": payload["config"][swept],
                "train_acc": payload["final_accuracy"]["train"],
                "val_acc": payload["final_accuracy"]["val"],
                "silhouette_qnn": payload["metrics"]["silhouette_qnn"],
            }
        )

    def ranked(key):
        order = sorted(
            rows,
            key=lambda r: (r[key] is None, -(r[key] if r[key] is not None else 0.0)),
        )
        return {id(r): pos + 1 for pos, r in enumerate(order)}

    val_rank = ranked("val_acc")
    sil_rank = ranked("silhouette_qnn")
    rows.sort(key=lambda r: val_rank[id(r)])
    lines = [f"run,{swept},train_acc,val_acc,silhouette_qnn,val_acc_rank,silhouette_rank"]
    for r in rows:
        sil = "null" if r["silhouette_qnn"] is None else f"{r['silhouette_qnn']:.6f}"
        lines.append(
            f"{r['run']},{r['swept']},{r['train_acc']:.6f},{r['val_acc']:.6f},"
            f"{sil},{val_rank[id(r)]},{sil_rank[id(r)]}"
        )
    with open(out_root / "summary.csv", "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"sweep complete: {len(rows)} runs, summary at {out_root / 'summary.csv'}")
    return 0


def cmd_analyze(args) -> int:
    path = Path(args.run_dir)
    log_path = path if path.suffix == ".csv" else path / "training_log.csv"
    if not log_path.exists():
        print(f"error: no training log at {log_path}", file=sys.stderr)
        return 2
    log = RunLog.from_csv(log_path)
    curve = curve_metrics_or_none(log)
    carried: dict = {}
    metrics_path = log_path.parent / "metrics.json"
    if metrics_path.exists():
        with open(metrics_path, "r", encoding="ascii") as fh:
            carried = json.load(fh).get("metrics", {})
    payload = metrics_payload(log, curve, None, carried.get("fdr_avg"), {})
    for key in ("silhouette_classical", "silhouette_feature_map", "silhouette_qnn"):
        payload["metrics"][key] = carried.get(key)
    if args.json:
        print(json.dumps(payload["metrics"], indent=2))
    else:
        from .report import _fmt

        for key, value in payload["metrics"].items():
            print(f"{key} = {_fmt(key, value)}")
    return 0
