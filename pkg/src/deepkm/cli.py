"""Command-line front end: run experiments, aggregate suites, score label
files, and export 2-D projections of embeddings.

Subcommands:

* ``run``     — train one method on one dataset, write a JSON report and
                a per-epoch loss TSV.
* ``suite``   — run a method list over a shared seed list, write per-run
                reports plus an aggregate ``suite.tsv``.
* ``eval``    — score a predicted-label file against a true-label file.
* ``project`` — run a method, project its final embeddings to the top-2
                principal components, write a plottable TSV.

Settings come from (highest precedence first) command-line flags, an INI
experiment file (``--config``), then built-in defaults. The output
directory defaults to ``$DEEPKM_OUT`` or ``./deepkm_out``.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import Dataset, concat_datasets, load_delimited, load_idx, make_blobs
from .harness import (
    METHODS,
    RunReport,
    SuiteResult,
    TrainConfig,
    default_lambda,
    run_method,
    run_suite,
)
from .metrics import evaluate

SUITE_HEADER = "method\tacc_mean\tacc_std\tnmi_mean\tnmi_std"


@dataclass
class ExperimentFile:
    """Fully resolved invocation: what to run, on what, where to write."""

    command: str
    dataset_spec: str | None
    methods: list[str]
    seeds: list[int]
    overrides: dict = field(default_factory=dict)  # TrainConfig fields
    out_dir: str = ""
    lam_explicit: bool = False  # False -> per-method default coefficient
    pred_path: str | None = None
    truth_path: str | None = None


def _parse_kv(body: str, what: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for part in body.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ValueError(f"bad {what} option {part!r}, expected key=value")
        key, val = part.split("=", 1)
        out[key.strip()] = val.strip()
    return out


_DELIMS = {"comma": ",", "tab": "\t", "semicolon": ";", "space": " "}


def parse_dataset_spec(spec: str) -> Dataset:
    """Build a Dataset from a compact source string.

    Forms:
      blobs[:n=500,k=4,dim=50,sep=8.0,noise=1.0,seed=0]
      idx:images=PATH[,labels=PATH][,images2=PATH,labels2=PATH][,take=N]
      idx:PATH
      csv:path=PATH[,delimiter=comma|tab|semicolon|space][,label=COL]
          [,skip=N][,minmax=true]
      csv:PATH
    """
    kind, _, body = spec.partition(":")
    kind = kind.strip().lower()
    if kind == "blobs":
        opts = _parse_kv(body, "blobs")
        known = {"n", "k", "dim", "sep", "noise", "seed"}
        if set(opts) - known:
            raise ValueError(f"unknown blobs option(s): {sorted(set(opts) - known)}")
        return make_blobs(
            n_per_cluster=int(opts.get("n", 500)),
            k=int(opts.get("k", 4)),
            dim=int(opts.get("dim", 50)),
            separation=float(opts.get("sep", 8.0)),
            noise_sigma=float(opts.get("noise", 1.0)),
            seed=int(opts.get("seed", 0)),
        )
    if kind == "idx":
        if not body:
            raise ValueError("idx source needs at least images=PATH")
        opts = {"images": body} if "=" not in body else _parse_kv(body, "idx")
        parts = []
        suffix = ""
        while f"images{suffix}" in opts:
            parts.append(load_idx(opts.pop(f"images{suffix}"), opts.pop(f"labels{suffix}", None)))
            suffix = str(len(parts) + 1)
        take = opts.pop("take", None)
        if opts:
            raise ValueError(f"unknown idx option(s): {sorted(opts)}")
        if not parts:
            raise ValueError("idx source needs at least images=PATH")
        dataset = parts[0] if len(parts) == 1 else concat_datasets(parts, name="idx")
        return dataset.take(int(take)) if take is not None else dataset
    if kind == "csv":
        if not body:
            raise ValueError("csv source needs a path")
        opts = {"path": body} if "=" not in body else _parse_kv(body, "csv")
        known = {"path", "delimiter", "label", "skip", "minmax"}
        if set(opts) - known:
            raise ValueError(f"unknown csv option(s): {sorted(set(opts) - known)}")
        if "path" not in opts:
            raise ValueError("csv source needs path=PATH")
        delim = opts.get("delimiter", "comma")
        if delim not in _DELIMS:
            raise ValueError(f"delimiter must be one of {sorted(_DELIMS)}")
        return load_delimited(
            opts["path"],
            delimiter=_DELIMS[delim],
            label_column=int(opts["label"]) if "label" in opts else None,
            skip_header=int(opts.get("skip", 0)),
            minmax_scale=opts.get("minmax", "false").lower() in ("true", "1", "yes"),
        )
    raise ValueError(f"unknown dataset source {kind!r}; use blobs:, idx: or csv:")


def _parse_hidden_dims(raw: str) -> tuple:
    return tuple(int(h) for h in raw.split(",") if h.strip())


_TRAIN_KEYS = {
    "k": int,
    "seed": int,
    "pretrain_epochs": int,
    "finetune_epochs": int,
    "batch_size": int,
    "lambda": float,
    "alpha": float,
    "latent_dim": int,
    "hidden_dims": _parse_hidden_dims,
    "optimizer": str,
    "learning_rate": float,
    "method": str,
}


def _read_config_file(path: str) -> dict:
    """INI experiment file -> {dataset_spec, methods, seeds, overrides, out_dir}."""
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise ValueError(f"cannot read config file {path}")
    out: dict = {"overrides": {}, "lam_explicit": False}
    if parser.has_option("dataset", "source"):
        out["dataset_spec"] = parser.get("dataset", "source")
    if parser.has_section("train"):
        for key, raw in parser.items("train"):
            if key not in _TRAIN_KEYS:
                raise ValueError(
                    f"{path}: unknown [train] key {key!r}; "
                    f"valid keys: {', '.join(sorted(_TRAIN_KEYS))}"
                )
            value = _TRAIN_KEYS[key](raw)
            if key == "lambda":
                out["overrides"]["lam"] = value
                out["lam_explicit"] = True
            else:
                out["overrides"][key] = value
    if parser.has_option("suite", "methods"):
        out["methods"] = [m.strip() for m in parser.get("suite", "methods").split(",") if m.strip()]
    if parser.has_option("suite", "seeds"):
        out["seeds"] = [int(s) for s in parser.get("suite", "seeds").split(",") if s.strip()]
    if parser.has_option("output", "dir"):
        out["out_dir"] = parser.get("output", "dir")
    return out


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="deepkm",
        description="Deep clustering experiments: alternating embedding "
        "training and K-means centroid refreshes, plus baselines.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser, with_method: bool = True):
        p.add_argument("--config", help="INI experiment file; flags override it")
        p.add_argument("--dataset", help="dataset source spec (blobs:, idx:, csv:)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--k", type=int, default=None, help="number of clusters")
        p.add_argument("--lambda", dest="lam", type=float, default=None,
                       help="clustering-term coefficient (default depends on method)")
        p.add_argument("--alpha", type=float, default=None, help="weight sharpness exponent")
        p.add_argument("--epochs", type=int, default=None, help="finetuning epochs")
        p.add_argument("--pretrain-epochs", type=int, default=None)
        p.add_argument("--batch-size", type=int, default=None)
        p.add_argument("--latent-dim", type=int, default=None)
        p.add_argument("--hidden-dims", default=None,
                       help="comma-separated encoder widths, e.g. 500,500,2000")
        p.add_argument("--optimizer", choices=["adam", "sgd"], default=None)
        p.add_argument("--learning-rate", type=float, default=None)
        p.add_argument("--out", default=None, help="output directory")
        if with_method:
            p.add_argument("--method", choices=list(METHODS), default=None)

    p_run = sub.add_parser("run", help="train one method on one dataset")
    add_common(p_run)
    p_suite = sub.add_parser("suite", help="run methods x seeds, aggregate a table")
    add_common(p_suite, with_method=False)
    p_suite.add_argument("--methods", help="comma-separated method list")
    p_suite.add_argument("--seeds", help="comma-separated seed list")
    p_eval = sub.add_parser("eval", help="score predicted labels against true labels")
    p_eval.add_argument("--pred", required=True, help="file with one predicted label per line")
    p_eval.add_argument("--truth", required=True, help="file with one true label per line")
    p_eval.add_argument("--out", default=None, help="output directory (metrics.json)")
    p_proj = sub.add_parser("project", help="run a method and export a 2-D projection")
    add_common(p_proj)
    return parser


def parse_cli(argv: list[str]) -> ExperimentFile:
    """Resolve argv (plus any --config file) into one ExperimentFile."""
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command == "eval":
        return ExperimentFile(
            command="eval", dataset_spec=None, methods=[], seeds=[],
            out_dir=args.out or "", pred_path=args.pred, truth_path=args.truth,
        )

    file_cfg: dict = {"overrides": {}, "lam_explicit": False}
    if args.config:
        try:
            file_cfg = _read_config_file(args.config)
        except (ValueError, configparser.Error) as exc:
            parser.error(str(exc))

    overrides = dict(file_cfg.get("overrides", {}))
    lam_explicit = bool(file_cfg.get("lam_explicit", False))
    flag_map = {
        "seed": args.seed, "k": args.k, "alpha": args.alpha,
        "finetune_epochs": args.epochs, "pretrain_epochs": args.pretrain_epochs,
        "batch_size": args.batch_size, "latent_dim": args.latent_dim,
        "optimizer": args.optimizer, "learning_rate": args.learning_rate,
    }
    for key, value in flag_map.items():
        if value is not None:
            overrides[key] = value
    if args.lam is not None:
        overrides["lam"] = args.lam
        lam_explicit = True
    if args.hidden_dims is not None:
        overrides["hidden_dims"] = _parse_hidden_dims(args.hidden_dims)
    method = getattr(args, "method", None)
    if method is not None:
        overrides["method"] = method

    if args.command == "suite":
        methods = (
            [m.strip() for m in args.methods.split(",") if m.strip()]
            if args.methods else file_cfg.get("methods", [])
        )
        seeds = (
            [int(s) for s in args.seeds.split(",") if s.strip()]
            if args.seeds else file_cfg.get("seeds", [])
        )
        if not methods:
            parser.error("suite needs --methods or a [suite] methods entry")
        if not seeds:
            seeds = [overrides.get("seed", 0)]
        unknown = [m for m in methods if m not in METHODS]
        if unknown:
            parser.error(f"unknown method(s) {unknown}; choose from {METHODS}")
    else:
        methods = [overrides.get("method", "ours")]
        seeds = [overrides.get("seed", 0)]

    dataset_spec = args.dataset or file_cfg.get("dataset_spec")
    if not dataset_spec:
        parser.error("no dataset given (use --dataset or a [dataset] source entry)")
    out_dir = args.out or file_cfg.get("out_dir", "")

    exp = ExperimentFile(
        command=args.command, dataset_spec=dataset_spec, methods=methods,
        seeds=seeds, overrides=overrides, out_dir=out_dir, lam_explicit=lam_explicit,
    )
    try:
        _effective_config(exp, methods[0], seeds[0])
    except ValueError as exc:
        parser.error(str(exc))
    return exp


def _effective_config(exp: ExperimentFile, method: str, seed: int) -> TrainConfig:
    fields = {k: v for k, v in exp.overrides.items() if k not in ("method", "seed")}
    if not exp.lam_explicit:
        fields["lam"] = default_lambda(method)
    return TrainConfig(method=method, seed=int(seed), **fields)


def resolve_out_dir(out_dir: str) -> Path:
    path = Path(out_dir or os.environ.get("DEEPKM_OUT") or "deepkm_out")
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_text(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def emit_report(reports: RunReport | list[RunReport], out_dir: str | Path,
                suite: SuiteResult | None = None) -> list[Path]:
    """Write per-run JSON + loss TSVs (and suite.tsv when given).

    Emission is deterministic: identical reports produce byte-identical
    files. Returns the written paths.
    """
    if isinstance(reports, RunReport):
        reports = [reports]
    out = resolve_out_dir(str(out_dir))
    written: list[Path] = []
    for report in reports:
        stem = f"{report.method}_seed{report.seed}"
        json_path = out / f"{stem}.json"
        _write_text(json_path, json.dumps(report.to_json_dict(), indent=2) + "\n")
        written.append(json_path)
        lines = ["epoch\treconstruction\tclustering"]
        for epoch, (rec, clu) in enumerate(
            zip(report.reconstruction_losses, report.clustering_losses)
        ):
            lines.append(f"{epoch}\t{rec!r}\t{clu!r}")
        tsv_path = out / f"{stem}_losses.tsv"
        _write_text(tsv_path, "\n".join(lines) + "\n")
        written.append(tsv_path)
    if suite is not None:
        lines = [SUITE_HEADER]
        for row in suite.rows:
            lines.append(
                f"{row.method}\t{row.acc_mean!r}\t{row.acc_std!r}"
                f"\t{row.nmi_mean!r}\t{row.nmi_std!r}"
            )
        suite_path = out / "suite.tsv"
        _write_text(suite_path, "\n".join(lines) + "\n")
        written.append(suite_path)
    return written


def project_2d(latents: np.ndarray, assignment: np.ndarray | None = None,
               truth: np.ndarray | None = None) -> np.ndarray:
    """Top-2 principal-component coordinates of the given points.

    Components are eigenvectors of the sample covariance (descending
    eigenvalue), each signed so its largest-magnitude loading is
    positive; ties on magnitude go to the lowest index. The label
    arguments are validated for length only (they ride along to the
    emitted file).
    """
    latents = np.asarray(latents, dtype=np.float64)
    if latents.ndim != 2 or latents.shape[0] < 2:
        raise ValueError("projection needs a 2-d array with at least 2 points")
    if latents.shape[1] < 2:
        raise ValueError("projection needs at least 2 feature dimensions")
    for name, arr in (("assignment", assignment), ("truth", truth)):
        if arr is not None and np.asarray(arr).shape != (latents.shape[0],):
            raise ValueError(f"{name} length does not match the number of points")
    centered = latents - latents.mean(axis=0)
    cov = (centered.T @ centered) / (latents.shape[0] - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    components = eigvecs[:, ::-1][:, :2]  # descending eigenvalue order
    for j in range(2):
        lead = np.argmax(np.abs(components[:, j]))
        if components[lead, j] < 0:
            components[:, j] = -components[:, j]
    return centered @ components


def write_projection(path: Path, coords: np.ndarray,
                     assignment: np.ndarray | None = None,
                     truth: np.ndarray | None = None) -> None:
    header = ["x", "y", "pred"] + (["truth"] if truth is not None else [])
    lines = ["\t".join(header)]
    for i in range(coords.shape[0]):
        row = [repr(float(coords[i, 0])), repr(float(coords[i, 1]))]
        row.append(str(int(assignment[i])) if assignment is not None else "")
        if truth is not None:
            row.append(str(int(truth[i])))
        lines.append("\t".join(row))
    _write_text(path, "\n".join(lines) + "\n")


def _load_label_file(path: str) -> np.ndarray:
    labels = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                labels.append(int(line))
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: not an integer label: {line!r}")
    if not labels:
        raise ValueError(f"{path}: no labels found")
    return np.asarray(labels, dtype=np.int64)


def _cmd_eval(exp: ExperimentFile) -> int:
    pred = _load_label_file(exp.pred_path)
    truth = _load_label_file(exp.truth_path)
    report = evaluate(pred, truth)
    payload = {
        "acc": float(report.acc),
        "nmi": float(report.nmi),
        "mapping": {str(k): int(v) for k, v in sorted(report.mapping.items())},
        "n": int(pred.shape[0]),
    }
    text = json.dumps(payload, indent=2)
    print(text)
    if exp.out_dir:
        _write_text(resolve_out_dir(exp.out_dir) / "metrics.json", text + "\n")
    return 0


def _print_run_line(report: RunReport) -> None:
    if report.metrics is None:
        print(f"{report.method} seed={report.seed}: done (no labels, metrics skipped)")
    else:
        print(
            f"{report.method} seed={report.seed}: "
            f"acc={report.metrics.acc:.4f} nmi={report.metrics.nmi:.4f}"
        )


def main(argv: list[str] | None = None) -> int:
    try:
        exp = parse_cli(sys.argv[1:] if argv is None else argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        if exp.command == "eval":
            return _cmd_eval(exp)
        dataset = parse_dataset_spec(exp.dataset_spec)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    if exp.command == "run":
        config = _effective_config(exp, exp.methods[0], exp.seeds[0])
        try:
            report = run_method(dataset, config)
        except Exception as exc:  # noqa: BLE001 - surface as exit status
            print(f"error: run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
            return 1
        paths = emit_report(report, exp.out_dir)
        _print_run_line(report)
        print(f"wrote {', '.join(str(p) for p in paths)}")
        return 0

    if exp.command == "suite":
        base = _effective_config(exp, exp.methods[0], exp.seeds[0])
        if exp.lam_explicit:
            result = run_suite(dataset, base, exp.seeds, exp.methods)
        else:
            # No explicit coefficient: give each method its own default.
            result = SuiteResult(rows=[], reports=[], failures=[])
            for method in exp.methods:
                cfg = _effective_config(exp, method, exp.seeds[0])
                part = run_suite(dataset, cfg, exp.seeds, [method])
                result.rows.extend(part.rows)
                result.reports.extend(part.reports)
                result.failures.extend(part.failures)
        paths = emit_report(result.reports, exp.out_dir, suite=result)
        for report in result.reports:
            _print_run_line(report)
        for method, seed, message in result.failures:
            print(f"FAILED {method} seed={seed}: {message}", file=sys.stderr)
        print(f"wrote {len(paths)} files to {resolve_out_dir(exp.out_dir)}")
        return 0 if not result.failures else 1

    if exp.command == "project":
        config = _effective_config(exp, exp.methods[0], exp.seeds[0])
        try:
            report = run_method(dataset, config)
        except Exception as exc:  # noqa: BLE001 - surface as exit status
            print(f"error: run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
            return 1
        coords = project_2d(report.latents, report.assignment, dataset.labels)
        out = resolve_out_dir(exp.out_dir)
        proj_path = out / f"{report.method}_seed{report.seed}_projection.tsv"
        write_projection(proj_path, coords, report.assignment, dataset.labels)
        emit_report(report, exp.out_dir)
        _print_run_line(report)
        print(f"wrote {proj_path}")
        return 0

    print(f"error: unknown command {exp.command!r}", file=sys.stderr)
    return 2
