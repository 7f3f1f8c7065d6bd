"""Command-line surface: corpus stats, training, ablations, comparisons, sweeps.

Conventions: human-readable progress goes to stderr, machine-readable
results go to files (the stats table, being the sole product of its
command, goes to stdout). Every output file is written atomically via a
temp file and rename. Exit codes: 0 success, 1 numeric failure, 2 I/O or
configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .dataset import load_corpus, load_ts_file, stats
from .errors import ConfigError, NumericError, ParseError, TfecError, UnsupportedCorpus
from .trainer import (
    RunConfig,
    RunReport,
    apply_overrides,
    config_from_dict,
    raw_kmeans_baseline,
    ablate,
    train,
    validate_config,
)
from . import coeh


def _say(message: str) -> None:
    print(message, file=sys.stderr)


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def _load_config(args) -> tuple[RunConfig, dict]:
    """Config file plus CLI overrides; returns (config, leftover sections)."""
    raw: dict = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise FileNotFoundError(f"file not found: {path}")
        raw = json.loads(path.read_text(encoding="utf-8"))
    extras = {"sweep": raw.pop("sweep", None)}
    cfg = config_from_dict(raw)
    if getattr(args, "data", None):
        cfg = replace(cfg, data=args.data)
    if getattr(args, "override", None):
        cfg = apply_overrides(cfg, args.override)
    validate_config(cfg)
    return cfg, extras


def _parse_seeds(args, cfg: RunConfig) -> list[int]:
    if getattr(args, "seed", None):
        seeds = [int(s) for s in str(args.seed).split(",") if s.strip() != ""]
        if not seeds:
            raise ConfigError("seed list is empty")
        return seeds
    return [cfg.seed]


def _load_data(cfg: RunConfig):
    if not cfg.data:
        raise ConfigError("no dataset path: set 'data' in the config or pass --data")
    path = Path(cfg.data)
    if not path.exists():
        raise FileNotFoundError(f"file not found: {path}")
    return load_corpus(path, merge=cfg.merge_splits)


def _metric_line(report: RunReport) -> str:
    if report.metrics is None:
        return "no labels; metrics skipped"
    m = report.metrics
    return f"ACC={m['acc']:.4f} NMI={m['nmi']:.4f} F1={m['f1']:.4f}"


def _write_run_outputs(outdir: Path, report: RunReport) -> None:
    body = dict(report.summary_dict())
    _atomic_write(outdir / "report.json", json.dumps(body, indent=2, sort_keys=True) + "\n")
    loss_rows = [
        [e["epoch"], repr(e["l_con"]), repr(e["l_recon"]), repr(e["l_total"])]
        for e in report.losses
    ]
    _atomic_write(outdir / "losses.csv", _csv_text(["epoch", "l_con", "l_recon", "l_total"], loss_rows))
    emb_lines = "\n".join(",".join(repr(float(v)) for v in row) for row in report.embeddings)
    _atomic_write(outdir / "embeddings.csv", emb_lines + "\n")
    assign_lines = "\n".join(str(int(a)) for a in report.assignments)
    _atomic_write(outdir / "assignments.csv", assign_lines + "\n")


def _mean_std(values: list[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    return float(arr.mean()), float(arr.std())


def _summarize(reports: list[RunReport]) -> dict:
    summary: dict = {"seeds": [r.seed for r in reports]}
    if all(r.metrics is not None for r in reports):
        for key in ("acc", "nmi", "f1"):
            mean, std = _mean_std([r.metrics[key] for r in reports])
            summary[key] = {"mean": mean, "std": std}
    return summary


def cmd_stats(args) -> int:
    corpora = []
    for raw in args.paths:
        path = Path(raw)
        if not path.exists():
            raise FileNotFoundError(f"file not found: {path}")
        if path.is_dir():
            files = sorted(path.glob("*.ts"))
            if not files:
                raise ParseError(f"no .ts files in directory {path}")
            corpora.extend(load_ts_file(f) for f in files)
        else:
            corpora.append(load_ts_file(path))
    for ds in corpora:
        n, t, f, classes = stats(ds)
        print(f"{ds.name}\t{n}\t{t}\t{f}\t{classes if classes is not None else '-'}")
    return 0


def cmd_train(args) -> int:
    cfg, _ = _load_config(args)
    seeds = _parse_seeds(args, cfg)
    ds = _load_data(cfg)
    outdir = Path(args.out)
    reports = []
    for seed in seeds:
        report = train(replace(cfg, seed=seed), ds)
        target = outdir if len(seeds) == 1 else outdir / f"seed_{seed}"
        _write_run_outputs(target, report)
        _say(f"seed {seed}: {_metric_line(report)}")
        reports.append(report)
    if len(seeds) > 1:
        _atomic_write(
            outdir / "summary.json",
            json.dumps(_summarize(reports), indent=2, sort_keys=True) + "\n",
        )
    return 0


_METRIC_KEYS = ("acc", "f1", "nmi")


def cmd_ablate(args) -> int:
    cfg, _ = _load_config(args)
    seeds = _parse_seeds(args, cfg)
    ds = _load_data(cfg)
    outdir = Path(args.out)
    rows = []
    for seed in seeds:
        results = ablate(replace(cfg, seed=seed), ds)
        full_metrics = results[0][2].metrics
        for name, (use_coeh, use_pgcl, use_read), report in results:
            m = report.metrics or {}
            degraded = ""
            if full_metrics and name != "full":
                dropped = [k.upper() for k in _METRIC_KEYS if m.get(k, 0.0) < full_metrics[k]]
                degraded = ";".join(dropped)
            rows.append(
                [
                    seed,
                    name,
                    str(use_coeh).lower(),
                    str(use_pgcl).lower(),
                    str(use_read).lower(),
                    repr(m.get("acc", float("nan"))),
                    repr(m.get("f1", float("nan"))),
                    repr(m.get("nmi", float("nan"))),
                    degraded,
                ]
            )
            _say(f"seed {seed} {name}: {_metric_line(report)}")
    header = ["seed", "row", "use_coeh", "use_pgcl", "use_read", "acc", "f1", "nmi", "degraded"]
    _atomic_write(outdir / "ablation.csv", _csv_text(header, rows))
    return 0


def cmd_compare_aug(args) -> int:
    cfg, _ = _load_config(args)
    seeds = _parse_seeds(args, cfg)
    ds = _load_data(cfg)
    outdir = Path(args.out)
    rows = []
    for label in ("coeh",) + coeh.BASELINE_KINDS:
        run_cfg = cfg if label == "coeh" else replace(cfg, baseline_aug=label)
        reports = [train(replace(run_cfg, seed=s), ds) for s in seeds]
        row = [label]
        for key in _METRIC_KEYS:
            mean, std = _mean_std([r.metrics[key] for r in reports])
            row.extend([repr(mean), repr(std)])
        rows.append(row)
        _say(f"{label}: " + " ".join(f"{k}={rows[-1][1 + 2 * i]}" for i, k in enumerate(_METRIC_KEYS)))
    header = ["augmentation"]
    for key in _METRIC_KEYS:
        header.extend([f"{key}_mean", f"{key}_std"])
    _atomic_write(outdir / "compare.csv", _csv_text(header, rows))
    return 0


def cmd_sweep(args) -> int:
    cfg, extras = _load_config(args)
    grid = extras.get("sweep")
    if not grid:
        raise ConfigError("sweep command needs a 'sweep' section in the config file")
    seeds = _parse_seeds(args, cfg)
    ds = _load_data(cfg)
    outdir = Path(args.out)

    keys = sorted(grid)
    points = list(itertools.product(*(grid[k] for k in keys)))
    leaderboard = []
    for index, values in enumerate(points):
        point_cfg = cfg
        for key, value in zip(keys, values):
            point_cfg = apply_overrides(point_cfg, [f"{key}={value}"])
        point_dir = outdir / f"point_{index:03d}"
        reports = [train(replace(point_cfg, seed=s), ds) for s in seeds]
        for report in reports:
            target = point_dir if len(seeds) == 1 else point_dir / f"seed_{report.seed}"
            _write_run_outputs(target, report)
        summary = _summarize(reports)
        _atomic_write(point_dir / "summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
        nmi_mean = summary.get("nmi", {}).get("mean", float("nan"))
        leaderboard.append((index, dict(zip(keys, values)), nmi_mean, point_cfg))
        _say(f"point {index}: " + ", ".join(f"{k}={v}" for k, v in zip(keys, values)) + f" -> NMI {nmi_mean:.4f}")

    leaderboard.sort(key=lambda item: (-(item[2] if np.isfinite(item[2]) else -np.inf), item[0]))
    rows = [
        [index, json.dumps(point, sort_keys=True), repr(nmi_mean)]
        for index, point, nmi_mean, _ in leaderboard
    ]
    _atomic_write(outdir / "leaderboard.csv", _csv_text(["point", "values", "nmi_mean"], rows))
    best_cfg = leaderboard[0][3]
    from dataclasses import asdict

    _atomic_write(outdir / "best_config.json", json.dumps(asdict(best_cfg), indent=2, sort_keys=True) + "\n")
    return 0


def cmd_baseline(args) -> int:
    cfg, _ = _load_config(args)
    seeds = _parse_seeds(args, cfg)
    ds = _load_data(cfg)
    outdir = Path(args.out)
    rows = []
    for seed in seeds:
        report = raw_kmeans_baseline(ds, seed, normalize=cfg.normalize)
        m = report.metrics
        rows.append([seed, repr(m["acc"]), repr(m["f1"]), repr(m["nmi"])])
        _say(f"seed {seed}: {_metric_line(report)}")
    _atomic_write(outdir / "baseline.csv", _csv_text(["seed", "acc", "f1", "nmi"], rows))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tfec",
        description="Temporal-frequency enhanced contrastive clustering of multivariate time series",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_stats = sub.add_parser("stats", help="print corpus statistics (name, N, T, F, classes)")
    p_stats.add_argument("paths", nargs="+", help=".ts files or directories of them")
    p_stats.set_defaults(func=cmd_stats)

    def add_run_args(p, needs_out=True):
        p.add_argument("--config", help="JSON config file (flat RunConfig keys)")
        p.add_argument("--data", help="corpus path (.ts file or directory); overrides config")
        p.add_argument(
            "--override",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override a config key (repeatable)",
        )
        p.add_argument("--seed", help="comma-separated seed list, e.g. 1,2,3")
        if needs_out:
            p.add_argument("--out", required=True, help="output directory")

    p_train = sub.add_parser("train", help="train on one corpus and write reports")
    add_run_args(p_train)
    p_train.set_defaults(func=cmd_train)

    p_ablate = sub.add_parser("ablate", help="run the five component-switch rows")
    add_run_args(p_ablate)
    p_ablate.set_defaults(func=cmd_ablate)

    p_cmp = sub.add_parser(
        "compare-aug", help="compare co-enhancement against the five classical augmenters"
    )
    add_run_args(p_cmp)
    p_cmp.set_defaults(func=cmd_compare_aug)

    p_sweep = sub.add_parser("sweep", help="grid search over config keys from the 'sweep' section")
    add_run_args(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_base = sub.add_parser("baseline", help="k-means on flattened series (trivial reference)")
    add_run_args(p_base)
    p_base.set_defaults(func=cmd_baseline)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericError as exc:
        _say(f"numeric failure: {exc}")
        return 1
    except (ConfigError, ParseError, UnsupportedCorpus) as exc:
        _say(f"error: {exc}")
        return 2
    except FileNotFoundError as exc:
        _say(f"error: {exc}")
        return 2
    except OSError as exc:
        _say(f"i/o error: {exc}")
        return 2
    except TfecError as exc:
        _say(f"error: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
