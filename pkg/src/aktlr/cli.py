"""Command-line front end.

Exit codes: 0 success, 1 configuration or I/O error, 2 data validation
error, 3 solver non-convergence when ``--strict`` (or ``strict: true``) is set.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import logging
import sys
from pathlib import Path

from . import __version__
from .data import (
    PRESETS,
    ConfigError,
    DataValidationError,
    ExperimentConfig,
    GroupPartition,
    load_dataset,
    standardize,
)
from .evaluation import GridSpec, grid_search, parse_range, run_cell, sensitivity_sweep
from .io import ExperimentReport, alpha_shares, load_model, save_model
from .model import predict_batch, train
from .synthetic import write_fixture

log = logging.getLogger("aktlr")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_SOLVER = 0, 1, 2, 3


class SolverNotConverged(RuntimeError):
    pass


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _load_config(path) -> ExperimentConfig:
    cfg = ExperimentConfig.load(path)
    for p in (cfg.source_path, cfg.target_path):
        if not p.is_file():
            raise ConfigError(f"data file not found: {p}")
    return cfg


def _load_pair(cfg: ExperimentConfig):
    source = load_dataset(cfg.source_path, cfg.partition, label_column=True, n_classes=cfg.n_classes)
    target = load_dataset(
        cfg.target_path,
        cfg.partition,
        label_column=cfg.target_labeled,
        n_classes=source.n_classes if cfg.target_labeled else None,
    )
    if cfg.standardize:
        source, target = standardize(source, target)
    return source, target


def _report(cfg: ExperimentConfig, command: str, runs: list[dict]) -> ExperimentReport:
    return ExperimentReport(
        command=command, config=cfg.to_dict(), seed=cfg.seed, runs=runs, created_at=_now()
    )


def _write_table(path: Path, header: list[str], rows: list[list]) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def cmd_train(args) -> int:
    cfg = _load_config(args.config)
    strict = cfg.strict or args.strict
    source, target = _load_pair(cfg)
    hp = cfg.hyperparams
    if target.labels is not None:
        result, model = run_cell(source, target, hp, no_group=cfg.ablation_no_group)
        if model is None:
            raise DataValidationError(result.error)
        run = result.to_dict()
    else:
        model, trace = train(source, target, hp, no_group=cfg.ablation_no_group)
        run = {
            "lambda1": hp.lambda1,
            "lambda2": hp.lambda2,
            "lambda3": hp.lambda3,
            "uar": None,
            "alpha": model.alpha_by_group(),
            "confusion": None,
            "objective_trace": list(model.objective_trace),
            "converged": trace.converged,
            "subsolvers_converged": trace.subsolvers_converged,
            "error": None,
        }
    out = cfg.output_path
    out.mkdir(parents=True, exist_ok=True)
    save_model(out / "model.npz", model)
    _report(cfg, "train", [run]).save(out / "report.json")
    if run["uar"] is not None:
        print(f"UAR {run['uar']:.2f}%  (evaluation mode: uses target labels)")
    print(f"wrote {out / 'model.npz'} and {out / 'report.json'}")
    if strict and not (run["converged"] and run["subsolvers_converged"]):
        raise SolverNotConverged("training did not converge")
    return EXIT_OK


def cmd_grid(args) -> int:
    cfg = _load_config(args.config)
    if cfg.grid is None:
        raise ConfigError("grid command needs a 'grid' section in the config")
    grid = GridSpec.from_config(cfg.grid)
    source, target = _load_pair(cfg)
    if target.labels is None:
        raise DataValidationError("grid search scores cells on target labels; target is unlabeled")
    workers = args.workers if args.workers is not None else cfg.workers
    log.info("running %d grid cells on %d worker(s)", len(grid), workers)
    results = grid_search(
        source, target, grid, cfg.hyperparams, no_group=cfg.ablation_no_group, workers=workers
    )
    out = cfg.output_path
    out.mkdir(parents=True, exist_ok=True)
    _report(cfg, "grid", [r.to_dict() for r in results]).save(out / "grid.json")
    _write_table(
        out / "grid.csv",
        ["rank", "lambda1", "lambda2", "lambda3", "uar", "converged", "error"],
        [
            [i + 1, *r.hyperparams.key, "" if r.uar is None else repr(r.uar), r.converged, r.error or ""]
            for i, r in enumerate(results)
        ],
    )
    best = results[0]
    print("evaluation mode: cells are ranked by target UAR (uses target labels)")
    if best.uar is not None:
        print(f"best UAR {best.uar:.2f}% at lambda = {best.hyperparams.key}")
    print(f"wrote {len(results)} rows to {out / 'grid.csv'}")
    if (cfg.strict or args.strict) and not all(r.converged and r.subsolvers_converged for r in results):
        raise SolverNotConverged("at least one grid cell did not converge")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load_config(args.config)
    sweep = cfg.sweep or {}
    axis = args.axis or sweep.get("axis")
    values = args.values or sweep.get("values")
    if axis is None or values is None:
        raise ConfigError("sweep needs an axis and values (config 'sweep' section or --axis/--values)")
    values = parse_range(values)
    source, target = _load_pair(cfg)
    if target.labels is None:
        raise DataValidationError("sensitivity sweep needs target labels")
    workers = args.workers if args.workers is not None else cfg.workers
    points = sensitivity_sweep(
        source, target, cfg.hyperparams, axis, values, no_group=cfg.ablation_no_group, workers=workers
    )
    out = cfg.output_path
    out.mkdir(parents=True, exist_ok=True)
    runs = [{"axis": axis, "value": v, **r.to_dict()} for v, r in points]
    _report(cfg, "sweep", runs).save(out / "sweep.json")
    _write_table(
        out / "sweep.csv",
        [axis, "uar"],
        [[v, "" if r.uar is None else repr(r.uar)] for v, r in points],
    )
    print(f"wrote {len(points)} points to {out / 'sweep.csv'}")
    return EXIT_OK


def cmd_predict(args) -> int:
    model = load_model(args.model)
    ds = load_dataset(args.features, model.partition, label_column=args.label_column)
    labels, Y_hat = predict_batch(model, ds.features)
    lines = [
        ",".join([str(int(lab))] + [repr(float(v)) for v in col])
        for lab, col in zip(labels, Y_hat.T)
    ]
    text = "\n".join(lines) + "\n"
    if args.output:
        Path(args.output).write_text(text)
        print(f"wrote {len(lines)} predictions to {args.output}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_report_alpha(args) -> int:
    try:
        report = ExperimentReport.load(args.report)
        run = report.runs[args.run]
        alpha = run["alpha"]
    except (OSError, ValueError, KeyError, IndexError, TypeError) as e:
        raise ConfigError(f"cannot read report {args.report}: {e}") from None
    rows = alpha_shares(alpha)
    if not any(a > 0 for _, a, _ in rows):
        print("warning: all group contributions are zero", file=sys.stderr)
    if args.format == "csv":
        w = csv.writer(sys.stdout)
        w.writerow(["group", "alpha", "share"])
        for name, a, s in rows:
            w.writerow([name, repr(a), repr(s)])
        return EXIT_OK
    width = max([len("group")] + [len(n) for n, _, _ in rows])
    print(f"{'group':<{width}}  {'alpha':>12}  {'share':>8}")
    for name, a, s in rows:
        print(f"{name:<{width}}  {a:12.6f}  {s:8.4f}")
    return EXIT_OK


def cmd_fixtures(args) -> int:
    paths = write_fixture(args.directory, seed=args.seed, n_samples=args.n_samples)
    for name, p in paths.items():
        print(f"{name}: {p}")
    return EXIT_OK


def cmd_presets(args) -> int:
    names = [args.name] if args.name else sorted(PRESETS)
    for name in names:
        part = GroupPartition.preset(name)
        print(f"{name} (G={part.n_groups}, d={part.total_dim})")
        for g, d in part.groups:
            print(f"  {g}: {d}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="aktlr", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"aktlr {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("train", help="train one model from a config file")
    s.add_argument("config")
    s.add_argument("--strict", action="store_true", help="exit 3 if any solver fails to converge")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("grid", help="hyperparameter grid search (scores on target labels)")
    s.add_argument("config")
    s.add_argument("--workers", type=int)
    s.add_argument("--strict", action="store_true")
    s.set_defaults(func=cmd_grid)

    s = sub.add_parser("sweep", help="one-parameter sensitivity sweep")
    s.add_argument("config")
    s.add_argument("--axis", choices=["lambda1", "lambda2", "lambda3"])
    s.add_argument("--values", help='list range such as "[10:10:100]"')
    s.add_argument("--workers", type=int)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("predict", help="predict labels for a feature file")
    s.add_argument("model")
    s.add_argument("features")
    s.add_argument("-o", "--output")
    s.add_argument("--label-column", action="store_true", help="file has a trailing label column (ignored)")
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("report-alpha", help="print learned group contributions from a report")
    s.add_argument("report")
    s.add_argument("--run", type=int, default=0, help="index into the report's runs")
    s.add_argument("--format", choices=["table", "csv"], default="table")
    s.set_defaults(func=cmd_report_alpha)

    s = sub.add_parser("fixtures", help="write the bundled synthetic fixture")
    s.add_argument("directory")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--n-samples", type=int, default=20)
    s.set_defaults(func=cmd_fixtures)

    s = sub.add_parser("presets", help="list built-in LLD group partitions")
    s.add_argument("name", nargs="?")
    s.set_defaults(func=cmd_presets)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except DataValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except SolverNotConverged as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
