"""
Command-line interface for adaptcast
"""

import argparse
import logging
import sys
from collections.abc import Sequence
from typing import Any

from .adaptive.engine import ood_recluster, run_stream
from .adaptive.evaluation import evaluate, tail_key
from .benchmarks import baseline_rows, baseline_single_cell, report_rows
from .config import AssignMode, FeatureVariant, PredictorKind
from .errors import ConfigError, MissingGroundTruthError
from .pipeline import cluster_segments, fit_framework, prepare_stream, prepare_training
from .reporting import MarkdownFormatter, ModelStore, dump_json, read_long_csv, write_long_csv
from .settings import RunConfig, SettingsLoader
from .synth.generator import generate, holdout_split, write_dataset_csv, write_labels_csv
from .timeseries.core import TimeSeries, ingest_csv
from .utils.logging import setup_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_INTERRUPTED = 130


def positive_int(value: str) -> int:
    try:
        number = int(value)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected an integer, got '{value}'") from e
    if number < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {number}")
    return number


def parse_variants(variants_str: list[str] | None) -> list[str] | None:
    """Parse comma- or space-separated variants; "all" stays a variant name"""
    if not variants_str:
        return None
    variants = []
    for variant_str in variants_str:
        variants.extend(v.strip() for v in variant_str.split(",") if v.strip())
    for variant in variants:
        FeatureVariant.from_string(variant)
    return variants


# Commands


def load_series(config: RunConfig, args: argparse.Namespace) -> list[TimeSeries]:
    result = ingest_csv(config.paths.data, impute=not getattr(args, "no_impute", False))
    if result.dropped_rows or result.split_count:
        logger.warning(
            f"Ingest dropped {result.dropped_rows} rows and split {result.split_count} series"
        )
    return result.series


def training_series(config: RunConfig, args: argparse.Namespace) -> list[TimeSeries]:
    """Every ingested series except the held-out cell's"""
    series = load_series(config, args)
    if config.holdout_cell is None:
        return series
    train, _ = holdout_split(series, config.holdout_cell)
    logger.info(f"Holding out {config.holdout_cell}; training on {len(train)} series")
    return train


def cmd_synth(args: argparse.Namespace, config: RunConfig) -> int:
    spec = config.synth.to_spec(config.seed)
    dataset = generate(spec)
    data_path = write_dataset_csv(dataset.series, config.paths.data)
    labels_path = write_labels_csv(
        dataset, data_path.with_name(f"{data_path.stem}_labels{data_path.suffix}")
    )
    print(f"✅ Wrote {len(dataset.series)} cells to {data_path} (labels: {labels_path})")
    return EXIT_OK


def cmd_ingest(args: argparse.Namespace, config: RunConfig) -> int:
    result = ingest_csv(config.paths.data, impute=not args.no_impute, max_gap=args.max_gap)
    summary = {
        "source": config.paths.data.as_posix(),
        "series": [
            {"cell_id": s.cell_id, "part": s.part, "length": len(s), "channels": list(s.channels)}
            for s in result.series
        ],
        "dropped_rows": result.dropped_rows,
        "imputed_rows": result.imputed_rows,
        "split_count": result.split_count,
    }
    store = ModelStore(config.paths.store, config.run_id)
    path = store.save_document("ingest", summary, kind="ingest")
    print(f"✅ Ingested {len(result.series)} series ({result.dropped_rows} rows dropped): {path}")
    return EXIT_OK


def cmd_cluster(args: argparse.Namespace, config: RunConfig) -> int:
    series = training_series(config, args)
    store = ModelStore(config.paths.store, config.run_id)
    # Clustering reads only the normalized output channel, so any variant will do
    prepared = prepare_training(series, config.framework(config.k_values[0], FeatureVariant.UNI))
    store.save_segments(prepared.segments)
    store.save_normalization(prepared.stats)
    for k in config.k_values:
        model = cluster_segments(prepared.segments, config.framework(k, FeatureVariant.UNI))
        path = store.save_cluster_model(model)
        print(f"✅ k={k}: inertia {model.inertia:.4f}, sizes {model.sizes} -> {path}")
    return EXIT_OK


def cmd_train(args: argparse.Namespace, config: RunConfig) -> int:
    series = training_series(config, args)
    store = ModelStore(config.paths.store, config.run_id)
    for variant in config.variants:
        prepared = prepare_training(series, config.framework(config.k_values[0], variant))
        store.save_feature_config(prepared.feature_config)
        for k in config.k_values:
            cluster_model = store.load_cluster_model(k)
            framework = fit_framework(
                series, config.framework(k, variant), cluster_model, prepared
            )
            store.save_predictors(variant, k, framework.training)
            fallback = sorted(framework.training.fallback_clusters)
            note = f", fallback clusters {fallback}" if fallback else ""
            print(f"✅ {FeatureVariant.get_display_name(variant)} k={k}: {k} predictors{note}")
    return EXIT_OK


def cmd_eval(args: argparse.Namespace, config: RunConfig) -> int:
    if config.holdout_cell is None:
        raise ConfigError("eval needs a held-out cell (--holdout or eval.holdout_cell)")
    dataset = load_series(config, args)
    _, held_out = holdout_split(dataset, config.holdout_cell)
    store = ModelStore(config.paths.store, config.run_id)
    out_dir = config.paths.reports / config.run_id
    out_dir.mkdir(parents=True, exist_ok=True)
    segments = store.load_segments() if config.ood_enabled else None

    rows: list[dict[str, Any]] = []
    for variant in config.variants:
        feature_config = store.load_feature_config(variant)
        framework_maes: dict[int, float] = {}
        stream = prepare_stream(held_out, feature_config)
        for k in config.k_values:
            cluster_model = store.load_cluster_model(k)
            models = store.load_predictors(variant, k)
            ood = config.ood_policy(cluster_model, segments) if segments is not None else None
            trace = run_stream(
                cluster_model,
                models,
                stream,
                cadence=config.cadence,
                ood=ood,
                assign_mode=config.assign_mode,
                params=config.dtw,
                with_truth=not args.forecast_only,
            )
            name = f"{variant.value}_k{k}"
            trace.to_csv(out_dir / f"trace_{name}.csv")
            if trace.buffered:
                store.save_segments(trace.buffered_segments(), f"ood_buffer_{name}")
                logger.warning(f"{len(trace.buffered)} OOD segments buffered for {name}")

            try:
                report = evaluate(
                    trace, FeatureVariant.get_display_name(variant), config.tail_weeks
                )
            except MissingGroundTruthError as e:
                logger.warning(f"{e}; MAE omitted for {name}")
                continue
            (out_dir / f"eval_{name}.json").write_text(dump_json(report.to_dict()), encoding="utf-8")
            rows.extend(report_rows(k, variant, report))
            framework_maes[k] = report.breakdown[tail_key(config.tail_weeks)]
            print(f"✅ {report.configuration} k={k}: weighted MAE {report.weighted_mae:.4f}")

        if config.baseline_cell is not None and not args.forecast_only:
            baseline = baseline_single_cell(
                dataset,
                config.baseline_cell,
                config.holdout_cell,
                config.framework(1, variant),
                framework_maes.get(max(config.k_values)),
                config.cadence,
                test_weeks=config.tail_weeks,
            )
            rows.extend(baseline_rows(baseline))

    if rows:
        path = write_long_csv(rows, out_dir / "results_long.csv")
        print(f"✅ Results table: {path}")
    return EXIT_OK


def cmd_report(args: argparse.Namespace, config: RunConfig) -> int:
    out_dir = config.paths.reports / config.run_id
    results = out_dir / "results_long.csv"
    if not results.exists():
        raise ConfigError(f"No evaluation results at {results}; run eval first")
    rows = read_long_csv(results)
    filename = out_dir / "report.md"
    MarkdownFormatter().create_report(rows, filename, config.run_id, metric=args.metric)
    print(f"✅ Report generated successfully: {filename}")
    return EXIT_OK


def cmd_ood_recluster(args: argparse.Namespace, config: RunConfig) -> int:
    store = ModelStore(config.paths.store, config.run_id)
    variant = FeatureVariant.from_string(args.variant)
    k = args.k or config.k_values[0]
    old_model = store.load_cluster_model(k)
    original = store.load_segments()
    buffered = store.load_segments(f"ood_buffer_{variant.value}_k{k}")
    result = ood_recluster(
        original,
        buffered,
        old_model,
        config.dtw,
        buffer_min_segments=config.ood_buffer_min_segments,
        max_iter=config.kmeans_max_iter,
        quantile=config.ood_quantile,
    )
    path = store.save_cluster_model(result.model, store.reclustered_path(k))
    store.save_document(f"recluster_k{k}", result.to_dict(), kind="recluster")
    status = "degenerate" if result.degenerate else "new cluster"
    print(f"✅ k={k} -> k={result.model.k} ({status} {result.new_cluster}): {path}")
    return EXIT_OK


# Parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Path to YAML settings file")
    common.add_argument("--debug", "-d", action="store_true", help="Enable debug logging")
    common.add_argument("--run-id", help="Run identifier (store and report subdirectory)")
    common.add_argument("--store", help="Model store root directory")
    common.add_argument("--reports", help="Report output root directory")
    common.add_argument("--data", help="Input/output CSV of cell series")
    common.add_argument("--seed", type=int, help="Random seed")
    common.add_argument("--workers", type=positive_int, help="Worker threads")
    common.add_argument("--log-dir", help='Log file directory ("" disables file logging)')

    sweep = argparse.ArgumentParser(add_help=False)
    sweep.add_argument("--k", dest="k_values", type=positive_int, nargs="+", help="K values to sweep")
    sweep.add_argument(
        "--variants", "-v", nargs="*", help="Feature configurations (uni, ran, peak, handover, all)"
    )
    sweep.add_argument("--holdout", help="Cell held out of clustering and training")
    sweep.add_argument("--no-impute", action="store_true", help="Split series at every gap")

    parser = argparse.ArgumentParser(
        prog="adaptcast",
        description="adaptcast - adaptive per-cluster traffic forecasting for cellular networks",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  adaptcast synth --cells 20 --weeks 12 --profiles 4 --seed 7
  adaptcast cluster --k 1 2 4 8 --holdout cell_000
  adaptcast train --k 1 2 4 8 --variants uni,all --holdout cell_000
  adaptcast eval --k 1 2 4 8 --variants uni,all --holdout cell_000
  adaptcast report

Feature configurations: uni, ran, peak, handover, all
        """,
    )
    commands = parser.add_subparsers(dest="command", required=True)

    synth = commands.add_parser("synth", parents=[common], help="Generate a synthetic dataset")
    synth.add_argument("--cells", type=positive_int, help="Number of cells")
    synth.add_argument("--weeks", type=positive_int, help="Weeks of hourly data per cell")
    synth.add_argument("--profiles", type=positive_int, help="Number of daily profiles (max 5)")
    synth.add_argument("--noise", type=float, help="Gaussian noise sigma")
    synth.set_defaults(handler=cmd_synth)

    ingest = commands.add_parser("ingest", parents=[common], help="Validate and summarise a CSV")
    ingest.add_argument("--no-impute", action="store_true", help="Split series at every gap")
    ingest.add_argument("--max-gap", type=int, default=2, help="Longest interpolated gap in hours")
    ingest.set_defaults(handler=cmd_ingest)

    cluster = commands.add_parser("cluster", parents=[common, sweep], help="Cluster daily segments")
    cluster.set_defaults(handler=cmd_cluster)

    train = commands.add_parser("train", parents=[common, sweep], help="Train per-cluster predictors")
    train.add_argument("--kind", help="Predictor kind (lstm, seasonal_naive)")
    train.add_argument("--epochs", type=positive_int, help="Training epochs")
    train.set_defaults(handler=cmd_train)

    evaluate_cmd = commands.add_parser(
        "eval", parents=[common, sweep], help="Serve the held-out cell and score it"
    )
    evaluate_cmd.add_argument("--cadence", type=positive_int, help="Reassignment cadence in steps")
    evaluate_cmd.add_argument("--assign-mode", help="trailing or target_day")
    evaluate_cmd.add_argument("--baseline-cell", help="Also score a k=1 model trained on this cell")
    evaluate_cmd.add_argument(
        "--tail-weeks", type=positive_int, help="Also score the final weeks of the held-out cell"
    )
    evaluate_cmd.add_argument("--ood", action="store_true", default=None, help="Enable OOD buffering")
    evaluate_cmd.add_argument(
        "--forecast-only", action="store_true", help="Ignore ground truth; emit the trace only"
    )
    evaluate_cmd.set_defaults(handler=cmd_eval)

    report = commands.add_parser("report", parents=[common], help="Render the results table")
    report.add_argument("--metric", default="weighted_mae", help="Metric shown in the table")
    report.set_defaults(handler=cmd_report)

    recluster = commands.add_parser(
        "ood-recluster", parents=[common], help="Fold buffered OOD segments into a k+1 clustering"
    )
    recluster.add_argument("--k", type=positive_int, help="Cluster model to grow")
    recluster.add_argument("--variant", default="uni", help="Configuration whose eval buffered OOD")
    recluster.set_defaults(handler=cmd_ood_recluster)

    return parser


def flag_settings(args: argparse.Namespace) -> dict[str, Any]:
    """Map parsed flags to dotted setting keys; absent flags stay None"""

    def get(name: str) -> Any:
        return getattr(args, name, None)

    kind = get("kind")
    assign_mode = get("assign_mode")
    return {
        "run.id": get("run_id"),
        "run.seed": get("seed"),
        "run.workers": get("workers"),
        "paths.data": get("data"),
        "paths.store": get("store"),
        "paths.reports": get("reports"),
        "paths.logs": get("log_dir"),
        "kmeans.k_values": get("k_values"),
        "features.variants": parse_variants(get("variants")),
        "predictor.kind": PredictorKind.from_string(kind).value if kind else None,
        "training.epochs": get("epochs"),
        "adaptive.cadence": get("cadence"),
        "adaptive.assign_mode": AssignMode.from_string(assign_mode).value if assign_mode else None,
        "ood.enabled": get("ood"),
        "eval.holdout_cell": get("holdout"),
        "eval.baseline_cell": get("baseline_cell"),
        "eval.tail_weeks": get("tail_weeks"),
        "synth.cells": get("cells"),
        "synth.weeks": get("weeks"),
        "synth.profiles": get("profiles"),
        "synth.noise_sigma": get("noise"),
    }


def run(argv: Sequence[str] | None = None) -> int:
    """Parse arguments, run one command and return its exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE

    try:
        config = SettingsLoader(args.config).run_config(flag_settings(args))
        setup_logging(
            debug_mode=args.debug,
            log_prefix=f"adaptcast-{args.command}",
            log_dir=config.paths.logs,
        )
        return args.handler(args, config)
    except ValueError as e:
        print(f"❌ Configuration error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except KeyboardInterrupt:
        print("\n👋 Stopped by user", file=sys.stderr)
        return EXIT_INTERRUPTED
    except Exception as e:
        logger.debug("Unhandled error", exc_info=True)
        print(f"❌ Error: {e}", file=sys.stderr)
        return EXIT_INTERNAL


def main() -> None:
    """Main CLI entry point"""
    sys.exit(run())


if __name__ == "__main__":
    main()
