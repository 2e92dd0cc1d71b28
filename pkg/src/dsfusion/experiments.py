"""End-to-end pipeline, repetition harness, and report emission.

A single run walks the full chain: split the data, fit the classifier
pool, rank members by mutual information on the validation split, grow
the ensemble, fit the fusion parameters under every weighting scheme,
and evaluate on the held-out test split.  The noise sweep repeats the
whole chain independently per (noise level, repetition) pair with child
seeds derived from one master seed, then aggregates the accuracy samples
into quartile summaries.

Reports are plain dicts with stable field names so the JSON dump is the
canonical, byte-reproducible record of a run.
"""

from __future__ import annotations

import csv
import json
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import baselearners, fusion, infotheory
from .baselearners import LearnerSpec, builtin_pool
from .data import Dataset, add_noise, imbalance_ratio, load_csv, stratified_split
from .errors import DSFusionError
from .fusion import FusionConfig
from .weights import WeightScheme

STAGES = ("pool", "rank", "select", "train", "run")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a pipeline run needs besides the seed."""

    data_path: str | None = None
    label_column: str | None = None
    positive_label: str | None = None
    split_fractions: tuple[float, float, float] = (0.5, 0.25, 0.25)
    pool: tuple[LearnerSpec, ...] = tuple(builtin_pool())
    schemes: tuple[WeightScheme, ...] = tuple(WeightScheme)
    noise_levels: tuple[float, ...] = (0.0, 0.01, 0.02, 0.05)
    repetitions: int = 25
    master_seed: int = 0
    cv_folds: int = 10
    fusion: FusionConfig = field(default_factory=FusionConfig)

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if any(level < 0 for level in self.noise_levels):
            raise ValueError("noise levels must be >= 0")
        if len(self.pool) < 1:
            raise ValueError("pool must not be empty")


@contextmanager
def _stage(name: str):
    """Tag escaping errors with the pipeline stage that raised them."""
    try:
        yield
    except DSFusionError as err:
        message = err.args[0] if err.args else ""
        if not str(message).startswith(f"[{name}]"):
            err.args = (f"[{name}] {message}",) + err.args[1:]
        raise


def _load_dataset(cfg: ExperimentConfig) -> Dataset:
    if cfg.data_path is None:
        raise ValueError("config has no data path and no dataset was passed in")
    dataset, report = load_csv(cfg.data_path, cfg.label_column, cfg.positive_label)
    if report.rows_rejected:
        print(f"note: {report}")
    return dataset

def _accuracy(pred, truth) -> float:
    return float(np.mean(np.asarray(pred) == np.asarray(truth)))


def majority_vote(label_rows) -> np.ndarray:
    """Per-sample majority over hard labels; exact ties go to class 0."""
    stacked = np.asarray(label_rows)
    n_classes = int(stacked.max()) + 1 if stacked.size else 2
    counts = np.zeros((stacked.shape[1], max(n_classes, 2)), dtype=np.int64)
    for row in stacked:
        counts[np.arange(row.size), row] += 1
    return np.argmax(counts, axis=1)


def pipeline_seeds(seed: int) -> dict[str, int]:
    """Stage seeds derived from one run seed, in a fixed order."""
    state = np.random.SeedSequence(seed).generate_state(5)
    return {
        "noise": int(state[0]),
        "split": int(state[1]),
        "cv": int(state[2]),
        "select": int(state[3]),
        "fusion": int(state[4]),
    }


def run_pipeline(
    cfg: ExperimentConfig,
    seed: int,
    dataset: Dataset | None = None,
    nsr: float = 0.0,
    upto: str = "run",
) -> dict:
    """One full (or truncated) pipeline run; returns the report dict.

    ``upto`` stops after an earlier stage: "pool" fits and scores the
    classifiers, "rank" adds mutual information, "select" the ensemble,
    "train" the fusion model; "run" adds the test evaluation.
    """
    if upto not in STAGES:
        raise ValueError(f"unknown stage {upto!r}")
    depth = STAGES.index(upto)
    seeds = pipeline_seeds(seed)

    with _stage("data"):
        ds = dataset if dataset is not None else _load_dataset(cfg)
        polluted = add_noise(ds, nsr, seeds["noise"])
        splits = stratified_split(polluted, cfg.split_fractions, seeds["split"])
    split_features = {
        "train": polluted.features[splits.train],
        "valid": polluted.features[splits.validation],
        "test": polluted.features[splits.test],
    }
    split_labels = {
        "train": polluted.labels[splits.train],
        "valid": polluted.labels[splits.validation],
        "test": polluted.labels[splits.test],
    }

    with _stage("pool"):
        trained = baselearners.fit(
            list(cfg.pool),
            split_features["train"],
            split_labels["train"],
            seed=seeds["cv"],
            n_folds=cfg.cv_folds,
            split_sizes=splits.sizes(),
        )
        scores = {
            part: [clf.predict_scores(split_features[part], split=part) for clf in trained]
            for part in ("train", "valid", "test")
        }
        hard = {
            part: [sm.hard_labels() for sm in scores[part]]
            for part in ("train", "valid", "test")
        }

    classifiers = [
        {
            "index": i,
            "name": clf.name,
            "train_accuracy": _accuracy(hard["train"][i], split_labels["train"]),
            "valid_accuracy": _accuracy(hard["valid"][i], split_labels["valid"]),
            "test_accuracy": _accuracy(hard["test"][i], split_labels["test"]),
        }
        for i, clf in enumerate(trained)
    ]
    report = {
        "dataset": {
            "name": ds.name,
            "n_samples": int(ds.n_samples),
            "n_features": int(ds.n_features),
            "imbalance_ratio": float(imbalance_ratio(ds)),
            "noise_nsr": float(nsr),
        },
        "seed": int(seed),
        "stage": upto,
        "split_fractions": [float(f) for f in cfg.split_fractions],
        "split_sizes": splits.sizes(),
        "schemes_requested": [s.value for s in cfg.schemes],
        "classifiers": classifiers,
    }
    test_accs = [c["test_accuracy"] for c in classifiers]
    bim_index = int(np.argmax(test_accs))
    report["bim"] = {
        "index": bim_index,
        "name": trained[bim_index].name,
        "test_accuracy": test_accs[bim_index],
    }
    if depth < 1:
        return report

    with _stage("rank"):
        mi_values = [
            infotheory.mutual_information(hard["valid"][i], split_labels["valid"])
            for i in range(len(trained))
        ]
        ranks = infotheory.rank_by_relevancy(mi_values)
    for i, row in enumerate(report["classifiers"]):
        row["mi"] = float(mi_values[i])
        row["rank"] = int(ranks[i])
    if depth < 2:
        return report

    with _stage("select"):
        selection = fusion.select_ensemble(
            scores["train"],
            scores["valid"],
            split_labels["train"],
            split_labels["valid"],
            ranks,
            seed=seeds["select"],
            config=cfg.fusion,
        )
    report["selection"] = {
        "chosen_size": selection.chosen_size,
        "member_ids": list(selection.member_ids),
        "member_names": [trained[i].name for i in selection.member_ids],
        "per_size": [
            {
                "size": r.size,
                "member_ids": list(r.member_ids),
                "train_accuracy": r.train_accuracy,
                "valid_accuracy": r.valid_accuracy,
                "mean_accuracy": r.mean_accuracy,
            }
            for r in selection.records
        ],
    }
    if depth < 3:
        return report

    members = list(selection.member_ids)
    with _stage("train"):
        result = fusion.train_fusion(
            [scores["train"][i] for i in members],
            [scores["valid"][i] for i in members],
            split_labels["train"],
            split_labels["valid"],
            list(cfg.schemes),
            [trained[i].cv_confusion for i in members],
            member_ids=members,
            seed=seeds["fusion"],
            config=cfg.fusion,
        )
    report["model"] = fusion.model_to_dict(result.model)
    report["schemes"] = [
        {
            "scheme": r.scheme.value,
            "train_objective": r.train_objective,
            "valid_accuracy": r.valid_accuracy,
        }
        for r in result.records
    ]
    if depth < 4:
        return report

    with _stage("run"):
        member_test_scores = [scores["test"][i] for i in members]
        for row, record in zip(report["schemes"], result.records):
            labels, conflicts = fusion.fused_labels_lenient(
                list(record.params), member_test_scores, cfg.fusion.proximity_mode
            )
            row["test_accuracy"] = _accuracy(labels, split_labels["test"])
            row["test_conflicts"] = conflicts
        fused_labels, bem_conflicts = fusion.fused_labels_lenient(
            list(result.model.params), member_test_scores, cfg.fusion.proximity_mode
        )
        bem_scheme = result.model.scheme.value
        bem_row = next(r for r in report["schemes"] if r["scheme"] == bem_scheme)
        report["bem"] = {
            "scheme": bem_scheme,
            "member_ids": members,
            "valid_accuracy": bem_row["valid_accuracy"],
            "test_accuracy": _accuracy(fused_labels, split_labels["test"]),
            "test_conflicts": bem_conflicts,
        }
        report["majority_vote"] = {
            "test_accuracy": _accuracy(
                majority_vote([hard["test"][i] for i in members]), split_labels["test"]
            )
        }
        report["test_labels"] = split_labels["test"].tolist()
        report["fused_test_labels"] = fused_labels.tolist()
    return report


# --- noise sweep --------------------------------------------------------------

def child_seed(master_seed: int, level_index: int, repetition: int) -> int:
    """Reproducible, pairwise-distinct seed for one sweep cell."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(level_index, repetition))
    return int(ss.generate_state(1)[0])


def _summary(samples) -> dict:
    values = np.asarray(samples, dtype=np.float64)
    q1, median, q3 = np.percentile(values, [25, 50, 75])
    return {
        "min": float(values.min()),
        "q1": float(q1),
        "median": float(median),
        "q3": float(q3),
        "max": float(values.max()),
        "mean": float(values.mean()),
    }


def sweep_methods(cfg: ExperimentConfig) -> list[str]:
    return ["bim", "majority"] + [s.value for s in cfg.schemes] + ["bem"]


def _sweep_cell(args):
    """One (noise level, repetition) pipeline run; never raises."""
    cfg, dataset, level_index, nsr, repetition = args
    seed = child_seed(cfg.master_seed, level_index, repetition)
    try:
        report = run_pipeline(cfg, seed, dataset=dataset, nsr=nsr)
    except DSFusionError as err:
        return level_index, repetition, seed, None, str(err)
    accuracies = {
        "bim": report["bim"]["test_accuracy"],
        "majority": report["majority_vote"]["test_accuracy"],
        "bem": report["bem"]["test_accuracy"],
    }
    for row in report["schemes"]:
        accuracies[row["scheme"]] = row["test_accuracy"]
    return level_index, repetition, seed, accuracies, None


def noise_sweep(
    cfg: ExperimentConfig, dataset: Dataset | None = None, workers: int = 1
) -> dict:
    """Repeat the full pipeline per noise level and aggregate accuracies.

    Every repetition re-pollutes and re-splits independently under its
    child seed, so cells can run in parallel (``workers`` processes) with
    a byte-identical result.  Failed repetitions are recorded and left
    out of the aggregates.
    """
    if cfg.repetitions < 2:
        raise ValueError("noise sweep needs at least 2 repetitions for quartiles")
    if dataset is None:
        dataset = _load_dataset(cfg)
    methods = sweep_methods(cfg)
    grid = [
        (cfg, dataset, level_index, nsr, repetition)
        for level_index, nsr in enumerate(cfg.noise_levels)
        for repetition in range(cfg.repetitions)
    ]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_sweep_cell, grid))
    else:
        outcomes = [_sweep_cell(args) for args in grid]

    levels = []
    for level_index, nsr in enumerate(cfg.noise_levels):
        runs = []
        failures = []
        for cell_level, repetition, seed, accuracies, error in outcomes:
            if cell_level != level_index:
                continue
            if error is not None:
                failures.append({"repetition": repetition, "seed": seed, "error": error})
            else:
                runs.append(
                    {"repetition": repetition, "seed": seed, "accuracies": accuracies}
                )
        summary = {}
        if runs:
            for method in methods:
                summary[method] = _summary([run["accuracies"][method] for run in runs])
        levels.append(
            {
                "nsr": float(nsr),
                "runs": runs,
                "failures": failures,
                "failure_count": len(failures),
                "summary": summary,
            }
        )
    return {
        "dataset": {"name": dataset.name, "n_samples": int(dataset.n_samples)},
        "master_seed": int(cfg.master_seed),
        "repetitions": int(cfg.repetitions),
        "noise_levels": [float(level) for level in cfg.noise_levels],
        "split_fractions": [float(f) for f in cfg.split_fractions],
        "methods": methods,
        "levels": levels,
    }


# --- report emission ----------------------------------------------------------

def report_json(report: dict) -> str:
    """Canonical JSON rendering: sorted keys, stable float text."""
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows(rows)


def _format_table(headers, rows) -> str:
    cells = [headers] + [[str(c) for c in row] for row in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(headers))]
    lines = []
    for r, row in enumerate(cells):
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
        if r == 0:
            lines.append("  ".join("-" * widths[i] for i in range(len(headers))))
    return "\n".join(lines) + "\n"


def _fmt(x) -> str:
    return f"{x:.4f}"


def _run_report_tables(report: dict):
    """(name, header, rows) triples for the CSV and text renderings."""
    tables = []
    has_rank = report["classifiers"] and "rank" in report["classifiers"][0]
    header = ["index", "name", "train_acc", "valid_acc", "test_acc"]
    if has_rank:
        header += ["mi", "rank"]
    header += ["bim"]
    rows = []
    for row in report["classifiers"]:
        cells = [
            row["index"],
            row["name"],
            _fmt(row["train_accuracy"]),
            _fmt(row["valid_accuracy"]),
            _fmt(row["test_accuracy"]),
        ]
        if has_rank:
            cells += [_fmt(row["mi"]), row["rank"]]
        cells += ["*" if row["index"] == report["bim"]["index"] else ""]
        rows.append(cells)
    tables.append(("classifiers", header, rows))

    if "selection" in report:
        rows = [
            [r["size"], " ".join(str(i) for i in r["member_ids"]),
             _fmt(r["train_accuracy"]), _fmt(r["valid_accuracy"]), _fmt(r["mean_accuracy"]),
             "*" if r["size"] == report["selection"]["chosen_size"] else ""]
            for r in report["selection"]["per_size"]
        ]
        tables.append(
            ("selection", ["size", "member_ids", "train_acc", "valid_acc", "mean_acc", "chosen"], rows)
        )
    if "schemes" in report:
        has_test = "test_accuracy" in report["schemes"][0]
        header = ["scheme", "valid_acc"] + (["test_acc"] if has_test else []) + ["bem"]
        rows = []
        for row in report["schemes"]:
            cells = [row["scheme"], _fmt(row["valid_accuracy"])]
            if has_test:
                cells.append(_fmt(row["test_accuracy"]))
            cells.append("*" if "bem" in report and row["scheme"] == report["bem"]["scheme"] else "")
            rows.append(cells)
        tables.append(("schemes", header, rows))
    if "bem" in report:
        rows = [
            ["bim", report["bim"]["name"], _fmt(report["bim"]["test_accuracy"])],
            ["majority", "", _fmt(report["majority_vote"]["test_accuracy"])],
            ["bem", report["bem"]["scheme"], _fmt(report["bem"]["test_accuracy"])],
        ]
        tables.append(("summary", ["method", "detail", "test_acc"], rows))
    return tables


def _sweep_report_tables(report: dict):
    samples_rows = []
    aggregate_rows = []
    for level in report["levels"]:
        for run in level["runs"]:
            for method, acc in run["accuracies"].items():
                samples_rows.append([level["nsr"], run["repetition"], method, acc])
        for method in report["methods"]:
            if method in level["summary"]:
                s = level["summary"][method]
                aggregate_rows.append(
                    [level["nsr"], method] + [_fmt(s[k]) for k in ("min", "q1", "median", "q3", "max", "mean")]
                )
    return [
        ("samples", ["nsr", "repetition", "method", "accuracy"], samples_rows),
        ("aggregates", ["nsr", "method", "min", "q1", "median", "q3", "max", "mean"], aggregate_rows),
    ]


def emit_report(report: dict, fmt: str, out_dir) -> list[Path]:
    """Write a report to disk as json, csv tables, or an aligned text file."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    is_sweep = "levels" in report
    written = []
    if fmt == "json":
        path = out_dir / ("sweep.json" if is_sweep else "report.json")
        path.write_text(report_json(report), encoding="utf-8")
        written.append(path)
    elif fmt == "csv":
        tables = _sweep_report_tables(report) if is_sweep else _run_report_tables(report)
        for name, header, rows in tables:
            path = out_dir / f"{name}.csv"
            _write_csv(path, header, rows)
            written.append(path)
    elif fmt == "text":
        tables = _sweep_report_tables(report) if is_sweep else _run_report_tables(report)
        chunks = []
        for name, header, rows in tables:
            chunks.append(f"== {name} ==\n" + _format_table(header, rows))
        path = out_dir / ("sweep.txt" if is_sweep else "report.txt")
        path.write_text("\n".join(chunks), encoding="utf-8")
        written.append(path)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    return written
