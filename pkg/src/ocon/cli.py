"""Command-line entry point: ocon <command> [flags].

Commands wire the pipeline end to end: ``ingest`` decodes a measurement
file, ``preprocess`` builds a scaled feature matrix, ``search`` runs a
heuristic grid stage, ``train`` fits the one-class bank, ``eval`` produces
the report tables, ``infer`` scores feature vectors, and ``report``
summarizes run manifests.  Config files use the plain ``key = value``
grammar; flags override file values, and the merged effective config is
echoed into the run manifest.

Exit codes: 0 success, 1 domain error (the error class name is printed on
stderr as ``ERROR <Name>: ...``), 2 usage error, 3 missing file.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .configfile import load_config
from .dataset import (
    ColumnLayout,
    class_statistics,
    filter_usable,
    load_dataset,
    read_records_csv,
    write_records_csv,
)
from .ensemble import infer as ensemble_infer
from .ensemble import load_ensemble, save_ensemble, train_ensemble
from .errors import OconError
from .features import (
    FeatureSetKind,
    build_feature_matrix,
    load_matrix,
    normalize_by_f0,
    save_matrix,
)
from .manifest import RunManifest, summarize_manifests
from .metrics import report_tables
from .mlp import MlpConfig
from .search import SearchStage, desk_scale, run_stage, stage_presets
from .training import EarlyStopRule, TrainConfig

_FEATURE_SETS = {kind.value: kind for kind in FeatureSetKind}


def _default_workers():
    return int(os.environ.get("OCON_WORKERS", "1"))


def _manifest_out(manifest, directory):
    manifest.finish()
    return manifest.write(directory)


def cmd_ingest(args):
    layout = ColumnLayout.from_file(args.layout) if args.layout else ColumnLayout.hgcw_bigdata()
    manifest = RunManifest("ingest", {"data": args.data, "layout": args.layout},
                           master_seed=0)
    manifest.add_input(args.data)
    records = load_dataset(args.data, layout)
    write_records_csv(records, args.out)
    stats = class_statistics(records)
    stats_path = args.stats or args.out + ".stats.txt"
    with open(stats_path, "w", encoding="utf-8") as fh:
        fh.write(f"rows: {len(records)}\n\n")
        fh.write(stats.format_table())
    manifest.add_output(args.out)
    manifest.add_output(stats_path)
    _manifest_out(manifest, os.path.dirname(os.path.abspath(args.out)))
    print(f"ingested {len(records)} rows -> {args.out}")
    return 0


def cmd_preprocess(args):
    kind = _FEATURE_SETS[args.feature_set]
    manifest = RunManifest("preprocess", {
        "records": args.records, "feature_set": args.feature_set,
        "exclude_children": args.exclude_children, "zscore": args.zscore,
        "f0_channel": args.f0_channel}, master_seed=0)
    manifest.add_input(args.records)
    records = read_records_csv(args.records)
    if args.exclude_children:
        records = [r for r in records if r.group.value in ("m", "w")]
    matrix, dropped = build_feature_matrix(records, kind, f0_mode=args.f0_channel,
                                           zscore=args.zscore)
    save_matrix(matrix, args.out)
    kept_stats = class_statistics(filter_usable(records, kind)[0])
    stats_path = args.out + ".stats.txt"
    with open(stats_path, "w", encoding="utf-8") as fh:
        fh.write(f"usable rows: {matrix.n_rows}\ndropped rows: {len(dropped)}\n")
        fh.write(f"feature set: {kind.value} (dim {kind.dim})\n")
        fh.write(f"scaling mode: {matrix.scaling.mode}\n")
        for i, name in enumerate(kind.component_names):
            fh.write(f"  {name}: lo={matrix.scaling.lo[i]!r} hi={matrix.scaling.hi[i]!r}\n")
        fh.write("\n" + kept_stats.format_table())
    outputs = [args.out, stats_path]
    if args.projection:
        outputs += _write_projections(records, args.projection)
    for path in outputs:
        manifest.add_output(path)
    manifest.extra["usable_rows"] = matrix.n_rows
    manifest.extra["dropped_rows"] = len(dropped)
    _manifest_out(manifest, os.path.dirname(os.path.abspath(args.out)))
    print(f"kept {matrix.n_rows} rows, dropped {len(dropped)} -> {args.out}")
    return 0


def _write_projections(records, prefix):
    """2-D (F1/F0, F2/F0) scatters, one file per scaling variant."""
    kind = FeatureSetKind.SS3
    kept, _ = filter_usable(records, kind)
    raw = np.stack([normalize_by_f0(rec, kind) for rec in kept])
    matrix, _ = build_feature_matrix(records, kind)
    paths = []
    for tag, points in (("raw", raw[:, :2]), ("scaled", matrix.values[:, :2])):
        path = f"{prefix}_{tag}.csv"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("label,x_f1_ratio,y_f2_ratio\n")
            for label, (x, y) in zip(matrix.labels, points):
                fh.write(f"{label},{x!r},{y!r}\n")
        paths.append(path)
    return paths


def _load_stage(spec_text):
    if spec_text.startswith("preset:"):
        name = spec_text.split(":", 1)[1]
        presets = {f"stage{i + 1}": s for i, s in enumerate(stage_presets())}
        if name not in presets:
            raise OconError(f"unknown preset {name!r}; use stage1..stage4")
        return presets[name]
    return SearchStage.from_file(spec_text)


def cmd_search(args):
    stage = _load_stage(args.stage)
    if args.desk_scale > 1:
        stage = desk_scale(stage, args.desk_scale)
    inherited = load_config(args.inherit) if args.inherit else None
    manifest = RunManifest("search", {
        "matrix": args.matrix, "stage": args.stage, "desk_scale": args.desk_scale,
        "workers": args.workers, "task": args.task}, master_seed=args.seed)
    manifest.add_input(args.matrix)
    matrix = load_matrix(args.matrix)
    result = run_stage(matrix, stage, inherited=inherited, seed=args.seed,
                       workers=args.workers, task=args.task)
    result.write_csv(args.out, times_path=args.out + ".times.csv")
    manifest.add_output(args.out)
    manifest.add_output(args.out + ".times.csv")
    best = result.selected
    manifest.extra["selected"] = {k: repr(v) for k, v in best.hps.items()}
    manifest.extra["selected_accuracy"] = best.mean_accuracy
    manifest.extra["cycles"] = stage.cycle_count(
        matrix.n_classes if args.task == "phoneme" else 3)
    _manifest_out(manifest, os.path.dirname(os.path.abspath(args.out)))
    print(f"stage {stage.name}: {len(result.rows)} combinations -> {args.out}")
    print(f"selected {best.hps} (mean accuracy {best.mean_accuracy:.2f}%)")
    return 0


def _check_keys(raw, allowed, what):
    unknown = sorted(set(raw) - set(allowed))
    if unknown:
        raise OconError(f"unknown {what} config keys: {', '.join(unknown)}")


def _mlp_config_from(args, input_dim):
    if args.mlp_config:
        raw = load_config(args.mlp_config)
        raw.setdefault("input_dim", input_dim)
        raw["hidden_layers"] = tuple(raw.get("hidden_layers", [100]))
        _check_keys(raw, MlpConfig.tuned(1).to_dict(), "mlp")
        cfg = MlpConfig(**raw)
    else:
        cfg = MlpConfig.tuned(input_dim)
    if args.seed is not None:
        cfg = MlpConfig(**{**cfg.to_dict(), "seed": args.seed})
    return cfg


def _train_config_from(args):
    if args.train_config:
        raw = load_config(args.train_config)
        _check_keys(raw, TrainConfig(early_stop=None).to_dict(), "train")
        if "early_stop" in raw and isinstance(raw["early_stop"], dict):
            raw["early_stop"] = EarlyStopRule(**raw["early_stop"])
        if "fractions" in raw:
            raw["fractions"] = tuple(raw["fractions"])
        tc = TrainConfig(**raw)
    else:
        tc = TrainConfig(early_stop=EarlyStopRule(0.15, 95.0))
    if args.seed is not None:
        tc = TrainConfig.from_dict({**tc.to_dict(), "seed": args.seed})
    return tc


def cmd_train(args):
    matrix = load_matrix(args.matrix)
    mlp_cfg = _mlp_config_from(args, matrix.feature_set.dim)
    train_cfg = _train_config_from(args)
    manifest = RunManifest("train", {
        "matrix": args.matrix, "task": args.task,
        "mlp": mlp_cfg.to_dict(), "train": train_cfg.to_dict()},
        master_seed=train_cfg.seed)
    manifest.add_input(args.matrix)
    model, reports = train_ensemble(matrix, mlp_cfg, train_cfg,
                                    workers=args.workers, task=args.task)
    save_ensemble(model, args.out_dir)
    report_path = os.path.join(args.out_dir, "train_reports.json")
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump([r.to_dict() for r in reports], fh, indent=2)
    manifest.add_output(os.path.join(args.out_dir, "ensemble.json"))
    manifest.add_output(report_path)
    mean_acc = sum(r.test_accuracy for r in reports) / len(reports)
    manifest.extra["mean_test_accuracy"] = mean_acc
    _manifest_out(manifest, args.out_dir)
    for r in reports:
        print(f"{r.class_name:<10} acc {r.test_accuracy:6.2f}%  "
              f"{r.train_seconds:7.2f}s  {r.stop_reason}")
    print(f"mean one-class test accuracy: {mean_acc:.2f}% -> {args.out_dir}")
    return 0


def cmd_eval(args):
    manifest = RunManifest("eval", {"model": args.model, "matrix": args.matrix},
                           master_seed=0)
    manifest.add_input(args.matrix)
    model = load_ensemble(args.model)
    matrix = load_matrix(args.matrix)
    tables = report_tables(model, matrix)
    print(tables.accuracy_text())
    print(tables.det_text())
    if args.out_dir:
        tables.write_csv(args.out_dir)
        for name in ("accuracy.csv", "det.csv", "confusion.csv"):
            manifest.add_output(os.path.join(args.out_dir, name))
        _manifest_out(manifest, args.out_dir)
    return 0


def _read_vectors(args):
    if args.input_file:
        rows = []
        with open(args.input_file, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    rows.append([float(t) for t in line.replace(",", " ").split()])
        return np.array(rows, dtype=np.float64)
    return np.array([[float(t) for t in args.input.replace(",", " ").split()]])


def cmd_infer(args):
    model = load_ensemble(args.model)
    vectors = _read_vectors(args)
    logits, predicted = ensemble_infer(model, vectors, scaled=args.scaled)
    for probs, pred in zip(np.atleast_2d(logits), np.atleast_1d(predicted)):
        label = model.class_names[int(pred)]
        if args.format == "jsonl":
            print(json.dumps({"logits": [float(p) for p in probs],
                              "predicted": int(pred), "label": label}))
        else:
            print(",".join(repr(float(p)) for p in probs) + f",{int(pred)},{label}")
    return 0


def cmd_report(args):
    paths = list(args.manifests)
    if args.dir:
        paths += [os.path.join(args.dir, f) for f in sorted(os.listdir(args.dir))
                  if f.startswith("manifest-") and f.endswith(".json")]
    if not paths:
        raise OconError("no manifests given")
    print(summarize_manifests(paths))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ocon",
        description="One-class-one-network workbench for formant-based recognition")
    parser.add_argument("--version", action="version", version=f"ocon {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse a measurement file into records")
    p.add_argument("--data", required=True)
    p.add_argument("--layout", help="column layout config (default: public distribution)")
    p.add_argument("--out", required=True, help="records CSV path")
    p.add_argument("--stats", help="stats sidecar path")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("preprocess", help="build a scaled feature matrix")
    p.add_argument("--records", required=True)
    p.add_argument("--feature-set", choices=sorted(_FEATURE_SETS), default="tt12")
    p.add_argument("--exclude-children", action="store_true")
    p.add_argument("--zscore", action="store_true",
                   help="standardize instead of min-max scaling")
    p.add_argument("--f0-channel", choices=("raw", "unit"), default="raw")
    p.add_argument("--projection", help="prefix for 2-D projection CSVs")
    p.add_argument("--out", required=True, help="matrix file path")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("search", help="run one heuristic grid-search stage")
    p.add_argument("--matrix", required=True)
    p.add_argument("--stage", required=True,
                   help="preset:stage1..preset:stage4 or a stage file")
    p.add_argument("--inherit", help="config file with inherited best estimates")
    p.add_argument("--workers", type=int, default=_default_workers())
    p.add_argument("--desk-scale", type=int, default=1,
                   help="shrink folds/epochs by this factor")
    p.add_argument("--task", choices=("phoneme", "speaker"), default="phoneme")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="ranked CSV path")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("train", help="train the one-class ensemble")
    p.add_argument("--matrix", required=True)
    p.add_argument("--mlp-config", help="MLP config file (default: tuned setup)")
    p.add_argument("--train-config", help="training config file")
    p.add_argument("--task", choices=("phoneme", "speaker"), default="phoneme")
    p.add_argument("--workers", type=int, default=_default_workers())
    p.add_argument("--seed", type=int, help="override the master seed")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate an ensemble on a matrix")
    p.add_argument("--model", required=True, help="ensemble directory")
    p.add_argument("--matrix", required=True)
    p.add_argument("--out-dir", help="where to write CSV tables and ROC points")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("infer", help="score feature vectors")
    p.add_argument("--model", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--input", help="comma/space separated feature vector")
    group.add_argument("--input-file", help="file with one vector per line")
    p.add_argument("--scaled", action="store_true",
                   help="inputs are already min-max scaled")
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("report", help="summarize run manifests")
    p.add_argument("manifests", nargs="*")
    p.add_argument("--dir", help="scan a directory for manifest files")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as err:
        print(f"ERROR FileNotFoundError: {err}", file=sys.stderr)
        return 3
    except OconError as err:
        print(f"ERROR {type(err).__name__}: {err}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as err:
        print(f"ERROR {type(err).__name__}: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
