"""Command-line front end.

Verbs mirror the pipeline stages: ``pool`` fits and scores the classifier
pool, ``rank`` adds the mutual-information ranking, ``select`` the
ensemble, ``train`` the fusion model, ``run`` the whole chain including
the test evaluation, ``sweep`` the noise/repetition harness, and
``predict`` applies a saved model.

Exit codes: 0 on success, 2 on configuration errors, 3 on data errors.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import baselearners, data, experiments, fusion
from .baselearners import LearnerSpec, builtin_pool
from .errors import DSFusionError, InvalidFractionsError, ParseError
from .experiments import ExperimentConfig, emit_report, noise_sweep, run_pipeline
from .fusion import FusionConfig
from .weights import parse_schemes


def _parse_splits(text: str):
    parts = [p for p in text.split(",") if p.strip()]
    if len(parts) != 3:
        raise ValueError(f"--splits needs three comma-separated fractions, got {text!r}")
    return tuple(float(p) for p in parts)


def _parse_noise(text: str):
    parts = [p for p in text.split(",") if p.strip()]
    if not parts:
        raise ValueError("--noise needs at least one level")
    return tuple(float(p) for p in parts)


def _build_pool(args) -> list[LearnerSpec]:
    pool = builtin_pool()
    for path in args.external_scores or []:
        pool.append(LearnerSpec("external", Path(path).stem, path=str(path)))
    return pool


def _config_from(args, need_noise: bool = False) -> ExperimentConfig:
    fusion_cfg = FusionConfig(
        proximity_mode=args.proximity_mode, optimize_mode=args.optimize_mode
    )
    kwargs = dict(
        data_path=args.data,
        label_column=args.label_col,
        positive_label=args.positive,
        split_fractions=_parse_splits(args.splits),
        pool=tuple(_build_pool(args)),
        schemes=tuple(parse_schemes(args.schemes)),
        master_seed=args.seed,
        fusion=fusion_cfg,
    )
    if need_noise:
        kwargs["noise_levels"] = _parse_noise(args.noise)
        kwargs["repetitions"] = args.reps
    return ExperimentConfig(**kwargs)


def _emit(report: dict, args) -> None:
    out = getattr(args, "out", None)
    if out:
        for fmt in ("json", "csv", "text"):
            emit_report(report, fmt, out)
        print(f"report written to {out}/")
    # always show the aligned tables on stdout
    tables = (
        experiments._sweep_report_tables(report)
        if "levels" in report
        else experiments._run_report_tables(report)
    )
    for name, header, rows in tables:
        print(f"== {name} ==")
        print(experiments._format_table(header, rows))


def _cmd_stage(args, upto: str) -> int:
    cfg = _config_from(args)
    report = run_pipeline(cfg, seed=args.seed, upto=upto)
    _emit(report, args)
    if upto in ("train", "run") and args.out:
        model = fusion.model_from_dict(report["model"])
        path = Path(args.out) / "model.json"
        fusion.save_model(model, path)
        print(f"model written to {path}")
    return 0


def _cmd_sweep(args) -> int:
    cfg = _config_from(args, need_noise=True)
    report = noise_sweep(cfg, workers=args.workers)
    _emit(report, args)
    return 0


def _load_feature_rows(path) -> np.ndarray:
    with Path(path).open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None:
            raise ParseError(f"{path} is empty")
        rows = []
        for line_no, cells in enumerate(reader, start=2):
            if not cells or all(not c.strip() for c in cells):
                continue
            try:
                rows.append([float(c) for c in cells])
            except ValueError:
                raise ParseError(f"{path}:{line_no}: non-numeric feature cell") from None
    if not rows:
        raise ParseError(f"{path}: no feature rows")
    return np.asarray(rows, dtype=np.float64)


def _cmd_predict(args) -> int:
    model = fusion.load_model(args.model)
    cfg = _config_from(args)
    ds = experiments._load_dataset(cfg)
    # reproduce the training-time split and pool from the same run seed
    seeds = experiments.pipeline_seeds(args.seed)
    splits = data.stratified_split(ds, cfg.split_fractions, seeds["split"])
    trained = baselearners.fit(
        list(cfg.pool),
        ds.features[splits.train],
        ds.labels[splits.train],
        seed=seeds["cv"],
        split_sizes=splits.sizes(),
    )
    if args.new_data:
        features = _load_feature_rows(args.new_data)
        truth = None
        split = None
    else:
        part = {"train": splits.train, "valid": splits.validation, "test": splits.test}[
            args.target_split
        ]
        features = ds.features[part]
        truth = ds.labels[part]
        split = args.target_split
    labels, mass, ignorance = fusion.predict(model, trained, features, split=split)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        path = out / "predictions.csv"
        header = ["row", "label"] + [f"mass_{k}" for k in range(mass.shape[1])] + ["ignorance"]
        with path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(header)
            for i in range(labels.size):
                writer.writerow(
                    [i, int(labels[i])]
                    + [repr(float(v)) for v in mass[i]]
                    + [repr(float(ignorance[i]))]
                )
        print(f"predictions written to {path}")
    print(f"predicted {labels.size} samples with ensemble {list(model.member_ids)}")
    if truth is not None:
        accuracy = float(np.mean(labels == truth))
        print(f"accuracy on {args.target_split}: {accuracy:.4f}")
    return 0


def _add_data_options(sp) -> None:
    sp.add_argument("--data", required=True, help="CSV dataset path")
    sp.add_argument("--label-col", required=True, help="name of the label column")
    sp.add_argument("--positive", required=True, help="label value of the positive (good) class")
    sp.add_argument("--splits", default="0.5,0.25,0.25", help="train,valid,test fractions")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default=None, help="directory for report files")
    sp.add_argument("--schemes", default="all", help="comma list w0..w5, or 'all'")
    sp.add_argument(
        "--external-scores", nargs="*", default=None, metavar="PATH",
        help="score files added as external pool slots (named by file stem)",
    )
    sp.add_argument("--proximity-mode", choices=("elementwise", "prototype"), default="elementwise")
    sp.add_argument("--optimize-mode", choices=("joint", "per_member"), default="joint")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dsfusion",
        description="Evidence-fusion ensemble classifier for binary tasks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for verb, upto, doc in (
        ("pool", "pool", "fit the classifier pool and report per-classifier accuracy"),
        ("rank", "rank", "add the mutual-information ranking"),
        ("select", "select", "grow the ensemble and report the per-size accuracies"),
        ("train", "train", "fit the fusion model under every weighting scheme"),
        ("run", "run", "full pipeline including the test evaluation"),
    ):
        sp = sub.add_parser(verb, help=doc)
        _add_data_options(sp)
        sp.set_defaults(func=lambda a, stage=upto: _cmd_stage(a, stage))

    sp = sub.add_parser("sweep", help="noise levels x repetitions with quartile summaries")
    _add_data_options(sp)
    sp.add_argument("--noise", default="0,0.01,0.02,0.05", help="comma list of noise-to-signal ratios")
    sp.add_argument("--reps", type=int, default=25, help="repetitions per noise level")
    sp.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    sp.set_defaults(func=_cmd_sweep)

    sp = sub.add_parser("predict", help="apply a saved fusion model")
    _add_data_options(sp)
    sp.add_argument("--model", required=True, help="model.json written by train/run")
    sp.add_argument(
        "--target-split", choices=("train", "valid", "test"), default="test",
        help="which split of --data to predict when --new-data is absent",
    )
    sp.add_argument("--new-data", default=None, help="feature-only CSV of new samples")
    sp.set_defaults(func=_cmd_predict)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, InvalidFractionsError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except DSFusionError as err:
        print(f"data error: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
