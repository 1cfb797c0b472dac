# Copyright 2026 The ransomtrace Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
#
"""Command-line entry point: ``ransomtrace {prepare,train,evaluate,explain,report,compare}``.

Every command reads and writes one run directory (``--out``) and finishes by
rewriting ``manifest.json``. Exit codes: 0 success, 2 configuration error,
3 data error, 4 numeric failure.
"""

import argparse
import logging
import math
import time
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from . import __version__
from .artifacts import (
    build_manifest,
    read_json,
    require,
    to_csv,
    to_json,
    write_artifacts,
    write_manifest,
)
from .checkpoint import encode_checkpoint, load_checkpoint
from .config import RunConfig, load_config
from .data_model import (
    CLASS_NAMES,
    FINE_TUNING_LEARNING_RATE,
    SIGN_CONVENTION,
    EvalReport,
    ImportanceSummary,
    SplitIndices,
)
from .errors import ExplainError, RansomtraceError, SchemaError
from .evaluation import evaluate_scores
from .explain import (
    bars_frame,
    class_profiles,
    lime_explain,
    occlusion_explain,
    summarize_importance,
)
from .ingest import (
    Dataset,
    apply_imputer,
    column_stats,
    column_stats_by_source,
    concat_datasets,
    fit_imputer,
    load_csv,
    missing_report,
    sample_rows,
    stratified_split,
)
from .model import embedding_matrix, embedding_stats, forward, init_model, model_predictor, predict_proba
from .nttp import SPECIAL_TOKENS, TokenVocab, build_vocab, fit_binner, prepared_frame, tokenize
from .sinks import FanOutRecordSink, JsonlFileRecordSink, LoggingRecordSink
from .svg import attention_svg, importance_svg, roc_svg
from .training import train
from .transforms import (
    apply_transforms,
    correlation_matrix,
    distribution_quantiles,
    fit_scalers,
    fit_transforms,
    transform_histograms,
    transform_report,
)

_logger = logging.getLogger(__name__)

IMPORTANCE_BARS = 15
STEP_LOGGER = "ransomtrace.train_steps"


# --- shared helpers ---


def _finish(config: RunConfig, command: str, started: float) -> None:
    manifest = build_manifest(
        config.out,
        tool_version=__version__,
        command=command,
        config=config.model_dump(mode="json"),
        seeds={"seed": config.seed},
        timing_seconds={command: round(time.perf_counter() - started, 3)},
    )
    write_manifest(config.out, manifest)
    _logger.info("%s finished; %d artifacts in %s", command, len(manifest.artifacts), config.out)


def _load_inputs(config: RunConfig) -> Dataset:
    config.check_inputs()
    datasets = [
        load_csv(spec.path, source=spec.source, candidates=config.label_candidates)
        for spec in config.inputs
    ]
    return datasets[0] if len(datasets) == 1 else concat_datasets(datasets)


def _read_prepared(run_dir: Path) -> tuple[list[str], np.ndarray, SplitIndices]:
    require(run_dir, "prepared.csv", "splits.json")
    frame = pd.read_csv(run_dir / "prepared.csv", dtype=str, keep_default_na=False)
    if list(frame.columns) != ["text", "label", "source"]:
        raise SchemaError("prepared.csv must have columns text,label,source")
    try:
        labels = np.asarray([CLASS_NAMES.index(v) for v in frame["label"]], dtype=np.int64)
    except ValueError as e:
        raise SchemaError(f"prepared.csv has an unknown label: {e}") from e
    splits = SplitIndices.model_validate(read_json(run_dir, "splits.json"))
    return frame["text"].tolist(), labels, splits


def _load_model(run_dir: Path):
    require(run_dir, "vocab.json", "checkpoint.bin")
    vocab = TokenVocab.model_validate(read_json(run_dir, "vocab.json"))
    model, _ = load_checkpoint(run_dir / "checkpoint.bin", vocab)
    return model, vocab


def _prepare_summary(raw: Dataset) -> dict:
    frame = raw.frame.copy()
    frame["__label"] = raw.labels
    frame["__source"] = raw.source
    sources, counts = np.unique(raw.source.astype(str), return_counts=True)
    return {
        "rows": len(raw),
        "rows_per_source": {str(s): int(c) for s, c in zip(sources, counts)},
        "rows_per_class": {name: int(np.sum(raw.labels == i)) for i, name in enumerate(CLASS_NAMES)},
        "duplicate_rows": int(frame.duplicated().sum()),
        "numeric_features": raw.numeric_features(),
        "categorical_features": raw.categorical_features(),
    }


def _explain_rows(test: Sequence[int], labels: np.ndarray, size: int) -> list[int]:
    """Up to ``size`` test rows, split as evenly as possible between the classes."""
    positive = [i for i in test if labels[i] == 1]
    negative = [i for i in test if labels[i] == 0]
    n_pos = min(len(positive), math.ceil(size / 2))
    n_neg = min(len(negative), size - n_pos)
    n_pos = min(len(positive), size - n_neg)
    return sorted(positive[:n_pos] + negative[:n_neg])


# --- commands ---


def cmd_prepare(config: RunConfig) -> None:
    """Ingest, impute, transform, bin and split; writes the prepared dataset."""
    started = time.perf_counter()
    raw = _load_inputs(config)
    if config.sample_n is not None:
        raw = sample_rows(raw, config.sample_n, config.seed)
    imputer = fit_imputer(raw)
    data = apply_imputer(imputer, raw)

    transforms = fit_transforms(data)
    report = transform_report(data, transforms)
    binning_input = data
    files: dict[str, str | bytes] = {}
    if config.pre_binning_transforms:
        scalers = fit_scalers(data, transforms)
        binning_input = apply_transforms(data, transforms, scalers)
        files["transforms.json"] = to_json(
            {
                "power": {k: v.model_dump(mode="json", by_alias=True) for k, v in transforms.items()},
                "minmax": {k: v.model_dump(mode="json") for k, v in scalers.items()},
            }
        )
    binner = fit_binner(
        binning_input, config.n_bins, include_categoricals=config.include_categoricals
    )
    splits = stratified_split(data, config.split_fractions, config.seed)

    files.update(
        {
            "prepared.csv": to_csv(prepared_frame(binner, binning_input)),
            "imputation.json": to_json(imputer),
            "binning.json": to_json(binner),
            "splits.json": to_json(splits),
            "transform_report.json": to_json(report),
            "transform_histograms.csv": to_csv(transform_histograms(data, transforms)),
            "column_stats.csv": to_csv(column_stats(data)),
            "column_stats_by_source.csv": to_csv(column_stats_by_source(raw)),
            "missing_report.csv": to_csv(missing_report(raw)),
            "correlation.csv": to_csv(correlation_matrix(binning_input), index=True),
            "distribution_quantiles.csv": to_csv(distribution_quantiles(binning_input)),
            "prepare_summary.json": to_json(_prepare_summary(raw)),
        }
    )
    write_artifacts(config.out, files)
    _finish(config, "prepare", started)


def cmd_train(config: RunConfig) -> None:
    """Builds the vocabulary on the train split and trains from a seeded init."""
    started = time.perf_counter()
    texts, labels, splits = _read_prepared(config.out)
    vocab = build_vocab(texts[i] for i in splits.train)

    def encode(rows: Sequence[int]):
        return [tokenize(vocab, texts[i], config.max_len, int(labels[i])) for i in rows]

    train_config = config.to_train_config()
    model = init_model(config.to_model_config(), len(vocab))
    with JsonlFileRecordSink(config.out / "train_steps.jsonl") as steps_file:
        sink = FanOutRecordSink(steps_file, LoggingRecordSink(STEP_LOGGER))
        model, history = train(
            model, encode(splits.train), encode(splits.validation), train_config, sink
        )
    metadata = {
        "train_config": train_config.model_dump(mode="json"),
        "fine_tuning_learning_rate": FINE_TUNING_LEARNING_RATE,
        "n_train": len(splits.train),
        "n_validation": len(splits.validation),
    }
    write_artifacts(
        config.out,
        {
            "vocab.json": to_json(vocab),
            "checkpoint.bin": encode_checkpoint(model, vocab, metadata),
            "history.json": to_json(history),
        },
    )
    _finish(config, "train", started)


def _attention_files(model, vocab: TokenVocab, texts, rows: Sequence[int], max_len: int) -> dict[str, str]:
    files = {}
    for row in rows:
        example = tokenize(vocab, texts[row], max_len)
        _, attentions = forward(model, [example], capture_attention=True)
        tokens = [SPECIAL_TOKENS[2], *texts[row].split()[: max_len - 1]]
        labels = [f"{j}:{t}" for j, t in enumerate(tokens)]
        for layer, probs in enumerate(attentions):
            for head in range(probs.shape[1]):
                frame = pd.DataFrame(probs[0, head].numpy(), columns=labels)
                frame.insert(0, "query", labels)
                files[f"attention/sample_{row}_layer_{layer}_head_{head}.csv"] = to_csv(frame)
    return files


def cmd_evaluate(config: RunConfig) -> None:
    """Scores the test split; writes the report, ROC points, predictions and attention."""
    started = time.perf_counter()
    texts, labels, splits = _read_prepared(config.out)
    model, vocab = _load_model(config.out)
    test = splits.test
    probs = predict_proba(model, [tokenize(vocab, texts[i], config.max_len) for i in test])
    actual = labels[test]
    report = evaluate_scores(probs[:, 1], actual)

    files: dict[str, str | bytes] = {"eval_report.json": to_json(report)}
    if report.roc is not None:
        files["roc.csv"] = to_csv(pd.DataFrame(report.roc, columns=["fpr", "tpr"]))
    files["predictions.csv"] = to_csv(
        pd.DataFrame(
            {
                "row": test,
                "label": actual,
                "p_benign": probs[:, 0],
                "p_ransomware": probs[:, 1],
                "predicted": (probs[:, 1] > 0.5).astype(np.int64),
            }
        )
    )
    files.update(
        _attention_files(model, vocab, texts, test[: config.attention_samples], config.max_len)
    )
    write_artifacts(config.out, files)
    _finish(config, "evaluate", started)


def cmd_explain(config: RunConfig) -> None:
    """Explains a class-balanced subset of the test split with each configured method."""
    started = time.perf_counter()
    texts, labels, splits = _read_prepared(config.out)
    model, vocab = _load_model(config.out)
    rows = _explain_rows(splits.test, labels, config.explain_size)
    if not rows:
        raise ExplainError("explain set is empty")
    if len({int(labels[r]) for r in rows}) < 2:
        raise ExplainError("explain set must contain both classes; raise explain_size")
    predictor = model_predictor(model, vocab)

    files: dict[str, str | bytes] = {}
    for method in config.explain_methods():
        explanations = []
        for row in rows:
            if method == "lime":
                explanation = lime_explain(
                    predictor,
                    texts[row],
                    n_samples=config.explain_n_samples,
                    kernel_width=config.kernel_width,
                    seed=config.seed,
                    workers=config.workers,
                )
            else:
                explanation = occlusion_explain(predictor, texts[row], workers=config.workers)
            explanations.append(explanation)
            files[f"explanations/{method}_{row}.json"] = to_json(explanation)
            files[f"explanations/{method}_{row}_bars.csv"] = to_csv(bars_frame(explanation))
        summary = summarize_importance(explanations, [int(labels[r]) for r in rows])
        files[f"importance_{method}.json"] = to_json(
            {
                "sign_convention": SIGN_CONVENTION,
                "summary": summary.model_dump(mode="json"),
                "profiles": class_profiles(summary),
            }
        )
        _logger.info("%s profiles: %s", method, class_profiles(summary))
    write_artifacts(config.out, files)
    _finish(config, "explain", started)


def cmd_report(config: RunConfig) -> None:
    """Renders SVG views and embedding statistics from earlier outputs."""
    started = time.perf_counter()
    run_dir = config.out
    require(run_dir, "eval_report.json", "vocab.json", "checkpoint.bin")
    importance = sorted(run_dir.glob("importance_*.json"))
    attention = sorted((run_dir / "attention").glob("*.csv"))
    missing = [
        name
        for name, found in (("importance_<method>.json", importance), ("attention/*.csv", attention))
        if not found
    ]
    if missing:
        raise SchemaError(f"missing inputs in {run_dir}: {', '.join(missing)}")

    files: dict[str, str | bytes] = {}
    report = EvalReport.model_validate(read_json(run_dir, "eval_report.json"))
    if report.roc is not None:
        files["report/roc.svg"] = roc_svg(report.roc, report.auc)
    else:
        _logger.warning("evaluation report has no ROC curve; roc.svg skipped")

    for path in importance:
        method = path.stem.removeprefix("importance_")
        summary = ImportanceSummary.model_validate(read_json(run_dir, path.name)["summary"])
        ransomware = next(c for c in summary.classes if c.label == 1)
        files[f"report/importance_{method}.svg"] = importance_svg(
            ransomware.top_features[:IMPORTANCE_BARS],
            f"{method}: mean signed weight, {ransomware.class_name} explanations",
        )

    frame = pd.read_csv(attention[0], float_precision="round_trip")
    files["report/attention.svg"] = attention_svg(
        frame.drop(columns="query").to_numpy(), frame["query"].tolist(), attention[0].stem
    )

    model, vocab = _load_model(run_dir)
    files["report/embedding_stats.json"] = to_json(embedding_stats(model))
    emb = embedding_matrix(model)
    matrix = pd.DataFrame(emb, columns=[f"d{k}" for k in range(emb.shape[1])])
    matrix.insert(0, "token", vocab.tokens[len(SPECIAL_TOKENS) :])
    files["report/embedding_matrix.csv"] = to_csv(matrix)
    write_artifacts(run_dir, files)
    _finish(config, "report", started)


def cmd_compare(run_dirs: Sequence[Path], out: Path) -> None:
    """Tabulates metrics and top features of several run directories."""
    rows = []
    for run_dir in run_dirs:
        report = EvalReport.model_validate(read_json(run_dir, "eval_report.json"))
        manifest = read_json(run_dir, "manifest.json")
        row = {
            "run": str(run_dir),
            "attention_mode": manifest.get("config", {}).get("attention_mode", "unknown"),
            "accuracy": report.metrics.accuracy,
            "precision": report.metrics.precision,
            "recall": report.metrics.recall,
            "f1": report.metrics.f1,
            "auc": report.auc,
        }
        for path in sorted(Path(run_dir).glob("importance_*.json")):
            method = path.stem.removeprefix("importance_")
            summary = ImportanceSummary.model_validate(read_json(run_dir, path.name)["summary"])
            for entry in summary.classes:
                top = entry.top_features[0] if entry.top_features else None
                row[f"{method}_top_{entry.class_name.lower()}"] = top.token if top else ""
        rows.append(row)
    write_artifacts(
        out,
        {
            "comparison.json": to_json(rows),
            "comparison.csv": to_csv(pd.DataFrame(rows)),
        },
    )


COMMANDS: dict[str, Callable[[RunConfig], None]] = {
    "prepare": cmd_prepare,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "explain": cmd_explain,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ransomtrace",
        description="Bin-token transformer ransomware detection with LIME and occlusion explanations.",
    )
    parser.add_argument("--log-level", default="INFO", help="logging level (default INFO)")
    commands = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sub = commands.add_parser(name, help=fn.__doc__.splitlines()[0])
        sub.add_argument("--config", type=Path, help="key/value run configuration file")
        sub.add_argument("--seed", type=int)
        sub.add_argument("--sample-n", type=int, dest="sample_n")
        sub.add_argument(
            "--attention-mode", choices=("absolute", "disentangled"), dest="attention_mode"
        )
        sub.add_argument("--epochs", type=int)
        sub.add_argument("--lr", type=float, dest="learning_rate")
        sub.add_argument(
            "--explain-method", choices=("lime", "occlusion", "both"), dest="explain_method"
        )
        sub.add_argument("--workers", type=int)
        sub.add_argument("--out", type=Path)
    compare = commands.add_parser("compare", help=cmd_compare.__doc__)
    compare.add_argument("run_dirs", nargs="+", type=Path)
    compare.add_argument("--out", type=Path, default=Path("comparison"))
    return parser


_OVERRIDES = (
    "seed",
    "sample_n",
    "attention_mode",
    "epochs",
    "learning_rate",
    "explain_method",
    "workers",
    "out",
)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=args.log_level.upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "compare":
            cmd_compare(args.run_dirs, args.out)
            return 0
        config = load_config(args.config, {k: getattr(args, k) for k in _OVERRIDES})
        COMMANDS[args.command](config)
    except RansomtraceError as e:
        _logger.error("%s: %s", type(e).__name__, e)
        return e.exit_code
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
