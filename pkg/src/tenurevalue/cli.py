"""Command-line pipeline: synth -> ingest -> stats -> brackets -> value -> report.

Each stage reads and writes plain files (CSV/JSON) so any step can run in
isolation, and `all` chains them while keeping every intermediate on disk.
Every stage drops a manifest JSON next to its outputs recording the
arguments it ran with; manifests carry a timestamp and are the only
non-reproducible bytes a run emits.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .errors import PipelineError
from .ingest import (
    SamplingPlan,
    ingest_panel,
    load_nature_map,
    load_price_index,
    read_series_csv,
    write_series_csv,
)
from .metrics import compute_stats_batch, read_stats_csv, write_stats_csv
from .panel import GOVERNMENT_CATEGORIES, MonthStamp, SectorCategory, ValuationMode
from .report import run_report
from .synth import (
    GeneratorConfig,
    counts_for_all_categories,
    generate_panel,
    load_config,
    write_price_index,
)
from .valuation import (
    MatchingKeyMode,
    build_private_brackets,
    read_bracket_table_csv,
    read_valuations_csv,
    value_batch,
    write_bracket_table_csv,
    write_bracket_table_json,
    write_valuations_csv,
)

DEFAULT_DEFLATE_TO = "2019-12"
DEFAULT_K_CLASSES = 10
DEFAULT_TRIM = 0.025
DEFAULT_BINS = 50
DEFAULT_WORKERS = 1000


def _write_manifest(
    out_dir: Path,
    subcommand: str,
    params: dict,
    inputs: list[str],
    outputs: list[str],
    seed: int | None,
) -> Path:
    manifest = {
        "subcommand": subcommand,
        "version": __version__,
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "seed": seed,
        "params": params,
        "inputs": inputs,
        "outputs": outputs,
    }
    path = out_dir / f"{subcommand}_manifest.json"
    with open(path, "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def _dump_json(path: Path, payload: dict) -> None:
    with open(path, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")


def stage_synth(
    panel_out: Path,
    index_out: Path | None,
    seed: int | None,
    workers: int | None,
    config_path: Path | None,
) -> dict:
    if config_path is not None:
        config = load_config(config_path)
    else:
        config = GeneratorConfig()
    overrides: dict = {}
    if seed is not None:
        overrides["rng_seed"] = seed
    if workers is not None:
        overrides["per_category_counts"] = counts_for_all_categories(workers)
    if overrides:
        config = dataclasses.replace(config, **overrides)

    summary = generate_panel(config, panel_out)
    outputs = [str(panel_out)]
    if index_out is not None:
        write_price_index(index_out)
        outputs.append(str(index_out))
    result = dataclasses.asdict(summary)
    result["outputs"] = outputs
    result["rng_seed"] = config.rng_seed
    return result


def stage_ingest(
    panel_path: Path,
    index_path: Path,
    deflate_to: MonthStamp,
    series_out: Path,
    report_out: Path,
    sample_quota: int | None,
    seed: int,
    nature_map_path: Path | None,
) -> dict:
    index = load_price_index(index_path, deflate_to)
    nature_map = load_nature_map(nature_map_path) if nature_map_path else None
    plan = None
    if sample_quota is not None:
        plan = SamplingPlan(
            per_category_quota={c: sample_quota for c in SectorCategory},
            rng_seed=seed,
        )
    with open(panel_path, newline="") as stream:
        series_list, report = ingest_panel(stream, index, plan, nature_map)
    write_series_csv(series_out, series_list)
    _dump_json(report_out, report.__dict__)
    return {"series_built": report.series_built, "switchers_discarded": report.switchers_discarded}


def stage_stats(series_path: Path, stats_out: Path, report_out: Path, threads: int) -> dict:
    series_list = read_series_csv(series_path)
    rows, excluded = compute_stats_batch(series_list, threads=threads)
    write_stats_csv(stats_out, rows)
    _dump_json(
        report_out,
        {
            "workers_in": len(series_list),
            "workers_out": len(rows),
            "excluded": [[pid, reason] for pid, reason in excluded],
        },
    )
    return {"workers_out": len(rows), "excluded": len(excluded)}


def stage_brackets(
    stats_path: Path,
    brackets_out: Path,
    json_out: Path | None,
    report_out: Path,
    k_classes: int,
    key_mode: MatchingKeyMode,
) -> dict:
    rows = read_stats_csv(stats_path)
    private = [r for r in rows if r.category is SectorCategory.PRIVATE]
    finite = [r for r in private if r.stats.sortino is not None]
    keyed = []
    keyless = 0
    for row in finite:
        key = row.mean_2005_wage if key_mode is MatchingKeyMode.MEAN_2005 else row.first_three_wage_sum
        if key is None:
            keyless += 1
            continue
        keyed.append((key, row.stats))
    table = build_private_brackets(keyed, k_classes)
    write_bracket_table_csv(brackets_out, table)
    if json_out is not None:
        write_bracket_table_json(json_out, table)
    _dump_json(
        report_out,
        {
            "private_workers": len(private),
            "infinite_sortino_dropped": len(private) - len(finite),
            "missing_key_dropped": keyless,
            "bracket_count": len(table),
            "matching_key": key_mode.value,
        },
    )
    return {"bracket_count": len(table)}


def stage_value(
    stats_path: Path,
    brackets_path: Path,
    valuations_out: Path,
    report_out: Path,
    mode: ValuationMode,
    key_mode: MatchingKeyMode,
) -> dict:
    rows = read_stats_csv(stats_path)
    government = [r for r in rows if r.category in GOVERNMENT_CATEGORIES]
    table = read_bracket_table_csv(brackets_path)
    valuations, excluded = value_batch(government, table, mode, key_mode)
    write_valuations_csv(valuations_out, valuations)
    _dump_json(
        report_out,
        {
            "workers_in": len(government),
            "workers_valued": len(valuations),
            "excluded": [[pid, reason] for pid, reason in excluded],
            "mode": mode.value,
            "matching_key": key_mode.value,
        },
    )
    return {"workers_valued": len(valuations)}


def stage_report(
    valuations_path: Path, out_dir: Path, trim_fraction: float, bin_count: int
) -> dict:
    valuations = read_valuations_csv(valuations_path)
    summaries, files = run_report(valuations, out_dir, trim_fraction, bin_count)
    return {"categories": len(summaries), "files": [str(p) for p in files]}


def _add_common_value_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--mode",
        choices=[m.value for m in ValuationMode],
        default=ValuationMode.FORMULA_CONSISTENT.value,
        help="risk-adjusted total derivation (default: formula)",
    )
    parser.add_argument(
        "--matching-key",
        choices=[m.value for m in MatchingKeyMode],
        default=MatchingKeyMode.MEAN_2005.value,
        help="salary statistic matched against brackets (default: mean-2005)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tenurevalue",
        description="Price civil-service job stability from monthly wage panels.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("synth", help="generate a synthetic wage panel")
    p.add_argument("--config", type=Path, help="generator config JSON")
    p.add_argument("--seed", type=int, help="RNG seed (overrides config)")
    p.add_argument("--workers", type=int, help="workers per category (overrides config)")
    p.add_argument("--out", type=Path, required=True, help="panel CSV to write")
    p.add_argument("--index-out", type=Path, help="also write a price index CSV here")

    p = sub.add_parser("ingest", help="parse, deflate, filter and sample a panel")
    p.add_argument("--input", type=Path, required=True, help="panel CSV")
    p.add_argument("--index", type=Path, required=True, help="price index CSV")
    p.add_argument("--deflate-to", type=MonthStamp.parse, default=MonthStamp.parse(DEFAULT_DEFLATE_TO), metavar="YYYY-MM")
    p.add_argument("--out", type=Path, required=True, help="series CSV to write")
    p.add_argument("--report", type=Path, help="ingest report JSON (default: alongside --out)")
    p.add_argument("--sample-quota", type=int, help="per-category person quota")
    p.add_argument("--seed", type=int, default=0, help="sampling seed")
    p.add_argument("--nature-map", type=Path, help="JSON mapping of extra employer nature codes")

    p = sub.add_parser("stats", help="per-worker risk/return statistics")
    p.add_argument("--input", type=Path, required=True, help="series CSV")
    p.add_argument("--out", type=Path, required=True, help="stats CSV to write")
    p.add_argument("--report", type=Path, help="stats report JSON (default: alongside --out)")
    p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("brackets", help="build private-sector income brackets")
    p.add_argument("--input", type=Path, required=True, help="stats CSV")
    p.add_argument("--out", type=Path, required=True, help="bracket table CSV to write")
    p.add_argument("--json-out", type=Path, help="also write the table as JSON")
    p.add_argument("--report", type=Path, help="brackets report JSON (default: alongside --out)")
    p.add_argument("--k-classes", type=int, default=DEFAULT_K_CLASSES)
    p.add_argument(
        "--matching-key",
        choices=[m.value for m in MatchingKeyMode],
        default=MatchingKeyMode.MEAN_2005.value,
    )

    p = sub.add_parser("value", help="price tenure for government workers")
    p.add_argument("--input", type=Path, required=True, help="stats CSV")
    p.add_argument("--brackets", type=Path, required=True, help="bracket table CSV")
    p.add_argument("--out", type=Path, required=True, help="valuations CSV to write")
    p.add_argument("--report", type=Path, help="value report JSON (default: alongside --out)")
    _add_common_value_flags(p)

    p = sub.add_parser("report", help="summaries, histograms and plots")
    p.add_argument("--input", type=Path, required=True, help="valuations CSV")
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--trim", type=float, default=DEFAULT_TRIM)
    p.add_argument("--bins", type=int, default=DEFAULT_BINS)

    p = sub.add_parser("all", help="run the whole pipeline into one directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=DEFAULT_WORKERS, help="workers per category")
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--config", type=Path, help="generator config JSON")
    p.add_argument("--deflate-to", type=MonthStamp.parse, default=MonthStamp.parse(DEFAULT_DEFLATE_TO), metavar="YYYY-MM")
    p.add_argument("--k-classes", type=int, default=DEFAULT_K_CLASSES)
    p.add_argument("--trim", type=float, default=DEFAULT_TRIM)
    p.add_argument("--bins", type=int, default=DEFAULT_BINS)
    p.add_argument("--threads", type=int, default=1)
    _add_common_value_flags(p)

    return parser


def _cmd_synth(args: argparse.Namespace) -> int:
    args.out.parent.mkdir(parents=True, exist_ok=True)
    result = stage_synth(args.out, args.index_out, args.seed, args.workers, args.config)
    _write_manifest(
        args.out.parent,
        "synth",
        {
            "workers": args.workers,
            "config": str(args.config) if args.config else None,
            "summary": {k: v for k, v in result.items() if k != "outputs"},
        },
        inputs=[str(args.config)] if args.config else [],
        outputs=result["outputs"],
        seed=result["rng_seed"],
    )
    return 0


def _cmd_ingest(args: argparse.Namespace) -> int:
    args.out.parent.mkdir(parents=True, exist_ok=True)
    report_out = args.report or args.out.parent / "ingest_report.json"
    deflate_to = args.deflate_to
    result = stage_ingest(
        args.input,
        args.index,
        deflate_to,
        args.out,
        report_out,
        args.sample_quota,
        args.seed,
        args.nature_map,
    )
    _write_manifest(
        args.out.parent,
        "ingest",
        {
            "deflate_to": str(deflate_to),
            "sample_quota": args.sample_quota,
            "summary": result,
        },
        inputs=[str(args.input), str(args.index)],
        outputs=[str(args.out), str(report_out)],
        seed=args.seed,
    )
    return 0


def _cmd_stats(args: argparse.Namespace) -> int:
    args.out.parent.mkdir(parents=True, exist_ok=True)
    report_out = args.report or args.out.parent / "stats_report.json"
    result = stage_stats(args.input, args.out, report_out, args.threads)
    _write_manifest(
        args.out.parent,
        "stats",
        {"threads": args.threads, "summary": result},
        inputs=[str(args.input)],
        outputs=[str(args.out), str(report_out)],
        seed=None,
    )
    return 0


def _cmd_brackets(args: argparse.Namespace) -> int:
    args.out.parent.mkdir(parents=True, exist_ok=True)
    report_out = args.report or args.out.parent / "brackets_report.json"
    key_mode = MatchingKeyMode(args.matching_key)
    result = stage_brackets(args.input, args.out, args.json_out, report_out, args.k_classes, key_mode)
    outputs = [str(args.out), str(report_out)]
    if args.json_out:
        outputs.append(str(args.json_out))
    _write_manifest(
        args.out.parent,
        "brackets",
        {"k_classes": args.k_classes, "matching_key": key_mode.value, "summary": result},
        inputs=[str(args.input)],
        outputs=outputs,
        seed=None,
    )
    return 0


def _cmd_value(args: argparse.Namespace) -> int:
    args.out.parent.mkdir(parents=True, exist_ok=True)
    report_out = args.report or args.out.parent / "value_report.json"
    mode = ValuationMode(args.mode)
    key_mode = MatchingKeyMode(args.matching_key)
    result = stage_value(args.input, args.brackets, args.out, report_out, mode, key_mode)
    _write_manifest(
        args.out.parent,
        "value",
        {"mode": mode.value, "matching_key": key_mode.value, "summary": result},
        inputs=[str(args.input), str(args.brackets)],
        outputs=[str(args.out), str(report_out)],
        seed=None,
    )
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    args.out_dir.mkdir(parents=True, exist_ok=True)
    result = stage_report(args.input, args.out_dir, args.trim, args.bins)
    _write_manifest(
        args.out_dir,
        "report",
        {"trim": args.trim, "bins": args.bins, "summary": {"categories": result["categories"]}},
        inputs=[str(args.input)],
        outputs=result["files"],
        seed=None,
    )
    return 0


def _cmd_all(args: argparse.Namespace) -> int:
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    mode = ValuationMode(args.mode)
    key_mode = MatchingKeyMode(args.matching_key)
    deflate_to = args.deflate_to

    panel = out / "panel.csv"
    index = out / "price_index.csv"
    series = out / "series.csv"
    stats = out / "stats.csv"
    brackets = out / "brackets.csv"
    valuations = out / "valuations.csv"
    report_dir = out / "report"

    synth_result = stage_synth(panel, index, args.seed, args.workers, args.config)
    _write_manifest(
        out,
        "synth",
        {"workers": args.workers, "summary": {k: v for k, v in synth_result.items() if k != "outputs"}},
        inputs=[],
        outputs=synth_result["outputs"],
        seed=synth_result["rng_seed"],
    )

    ingest_result = stage_ingest(
        panel,
        index,
        deflate_to,
        series,
        out / "ingest_report.json",
        args.workers,
        args.seed,
        None,
    )
    _write_manifest(
        out,
        "ingest",
        {"deflate_to": str(deflate_to), "sample_quota": args.workers, "summary": ingest_result},
        inputs=[str(panel), str(index)],
        outputs=[str(series), str(out / "ingest_report.json")],
        seed=args.seed,
    )

    stats_result = stage_stats(series, stats, out / "stats_report.json", args.threads)
    _write_manifest(
        out,
        "stats",
        {"threads": args.threads, "summary": stats_result},
        inputs=[str(series)],
        outputs=[str(stats), str(out / "stats_report.json")],
        seed=None,
    )

    brackets_result = stage_brackets(
        stats, brackets, out / "brackets.json", out / "brackets_report.json", args.k_classes, key_mode
    )
    _write_manifest(
        out,
        "brackets",
        {"k_classes": args.k_classes, "matching_key": key_mode.value, "summary": brackets_result},
        inputs=[str(stats)],
        outputs=[str(brackets), str(out / "brackets.json"), str(out / "brackets_report.json")],
        seed=None,
    )

    value_result = stage_value(
        stats, brackets, valuations, out / "value_report.json", mode, key_mode
    )
    _write_manifest(
        out,
        "value",
        {"mode": mode.value, "matching_key": key_mode.value, "summary": value_result},
        inputs=[str(stats), str(brackets)],
        outputs=[str(valuations), str(out / "value_report.json")],
        seed=None,
    )

    report_result = stage_report(valuations, report_dir, args.trim, args.bins)
    _write_manifest(
        report_dir,
        "report",
        {"trim": args.trim, "bins": args.bins, "summary": {"categories": report_result["categories"]}},
        inputs=[str(valuations)],
        outputs=report_result["files"],
        seed=None,
    )
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "ingest": _cmd_ingest,
    "stats": _cmd_stats,
    "brackets": _cmd_brackets,
    "value": _cmd_value,
    "report": _cmd_report,
    "all": _cmd_all,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.subcommand](args)
    except PipelineError as exc:
        print(
            json.dumps({"error": type(exc).__name__, "message": str(exc)}),
            file=sys.stderr,
        )
        return 2
    except OSError as exc:
        print(json.dumps({"error": "OSError", "message": str(exc)}), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
