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
"""End-to-end tests of the command-line pipeline on small synthetic inputs."""

import json
import xml.etree.ElementTree as ET
from pathlib import Path

import pandas as pd
import pytest

from ransomtrace.cli import build_parser, main
from ransomtrace.svg import SVG_NS

STAGES = ("prepare", "train", "evaluate", "explain", "report")


# --- Fixtures ---


@pytest.fixture
def run_config(tmp_path: Path, dataset_csvs) -> Path:
    """A small, fast configuration over the two synthetic input files."""
    pm, ug = dataset_csvs
    path = tmp_path / "small.env"
    path.write_text(
        f"INPUTS={pm}:process_memory,{ug}:network_traffic\n"
        "D_MODEL=16\n"
        "N_HEADS=2\n"
        "N_LAYERS=1\n"
        "D_FFN=32\n"
        "MAX_LEN=32\n"
        "EPOCHS=1\n"
        "EXPLAIN_N_SAMPLES=40\n"
        "EXPLAIN_SIZE=2\n"
        "ATTENTION_SAMPLES=1\n"
        f"OUT={tmp_path / 'run'}\n",
        encoding="utf-8",
    )
    return path


def _run_all(config: Path, out: Path, *extra: str) -> None:
    for stage in STAGES:
        assert main([stage, "--config", str(config), "--out", str(out), *extra]) == 0, stage


def _files(run_dir: Path) -> dict[str, bytes]:
    return {
        p.relative_to(run_dir).as_posix(): p.read_bytes()
        for p in sorted(run_dir.rglob("*"))
        if p.is_file()
    }


# --- Tests ---


def test_full_pipeline_writes_every_artifact(run_config: Path, tmp_path: Path):
    """
    Tests that prepare, train, evaluate, explain and report produce their outputs.
    """
    out = tmp_path / "run"
    _run_all(run_config, out)

    files = _files(out)
    for name in (
        "prepared.csv",
        "imputation.json",
        "binning.json",
        "splits.json",
        "transform_report.json",
        "column_stats.csv",
        "column_stats_by_source.csv",
        "missing_report.csv",
        "prepare_summary.json",
        "vocab.json",
        "checkpoint.bin",
        "history.json",
        "train_steps.jsonl",
        "eval_report.json",
        "roc.csv",
        "predictions.csv",
        "importance_lime.json",
        "importance_occlusion.json",
        "report/roc.svg",
        "report/importance_lime.svg",
        "report/importance_occlusion.svg",
        "report/attention.svg",
        "report/embedding_stats.json",
        "report/embedding_matrix.csv",
        "manifest.json",
    ):
        assert name in files, name
    assert "transforms.json" not in files

    prepared = pd.read_csv(out / "prepared.csv", dtype=str)
    assert list(prepared.columns) == ["text", "label", "source"]
    assert len(prepared) == 200
    assert set(prepared["source"]) == {"process_memory", "network_traffic"}

    splits = json.loads(files["splits.json"])
    assert (len(splits["train"]), len(splits["validation"]), len(splits["test"])) == (160, 20, 20)
    assert len(pd.read_csv(out / "predictions.csv")) == 20

    assert len([n for n in files if n.startswith("attention/")]) == 2
    assert len([n for n in files if n.startswith("explanations/lime_") and n.endswith(".json")]) == 2

    history = json.loads(files["history.json"])
    assert history["steps_per_epoch"] == 20
    assert len(files["train_steps.jsonl"].decode().splitlines()) == 21

    manifest = json.loads(files["manifest.json"])
    assert manifest["command"] == "report"
    listed = {a["path"] for a in manifest["artifacts"]}
    assert listed == set(files) - {"manifest.json"}


def test_attention_svg_values_match_the_csv(run_config: Path, tmp_path: Path):
    """
    Tests that every heatmap opacity in the report appears verbatim in its attention CSV.
    """
    out = tmp_path / "run"
    _run_all(run_config, out)

    source = sorted((out / "attention").glob("*.csv"))[0]
    cells = {
        cell
        for line in source.read_text(encoding="utf-8").splitlines()[1:]
        for cell in line.split(",")[1:]
    }
    svg = ET.fromstring((out / "report" / "attention.svg").read_text(encoding="utf-8"))
    opacities = [el.get("fill-opacity") for el in svg.iter(f"{{{SVG_NS}}}rect")]
    assert opacities
    assert [v for v in opacities if v not in cells] == []


def _without_volatile(manifest_bytes: bytes) -> dict:
    manifest = json.loads(manifest_bytes)
    for path in manifest["volatile_fields"]:
        *parents, leaf = path.split(".")
        node = manifest
        for key in parents:
            node = node[key]
        node.pop(leaf)
    return manifest


def test_pipeline_is_deterministic(run_config: Path, tmp_path: Path):
    """
    Tests that two runs with the same seed write byte-identical artifacts and
    manifests that differ only in their declared volatile fields.
    """
    first, second = tmp_path / "a", tmp_path / "b"
    _run_all(run_config, first)
    _run_all(run_config, second)
    a, b = _files(first), _files(second)
    manifest_a, manifest_b = a.pop("manifest.json"), b.pop("manifest.json")
    assert a.keys() == b.keys()
    for name in a:
        assert a[name] == b[name], name
    assert json.loads(manifest_a)["volatile_fields"] == ["config.out", "timing_seconds"]
    assert _without_volatile(manifest_a) == _without_volatile(manifest_b)


def test_pre_binning_transforms_are_written(run_config: Path, tmp_path: Path):
    out = tmp_path / "transformed"
    with run_config.open("a", encoding="utf-8") as f:
        f.write("PRE_BINNING_TRANSFORMS=true\n")
    assert main(["prepare", "--config", str(run_config), "--out", str(out)]) == 0
    transforms = json.loads((out / "transforms.json").read_text(encoding="utf-8"))
    assert set(transforms) == {"power", "minmax"}
    assert set(transforms["power"]) <= set(transforms["minmax"])


def test_compare_tabulates_runs(run_config: Path, tmp_path: Path):
    """
    Tests that compare writes one row per run with the attention mode and metrics.
    """
    absolute, disentangled = tmp_path / "abs", tmp_path / "dis"
    _run_all(run_config, absolute)
    _run_all(run_config, disentangled, "--attention-mode", "disentangled")

    out = tmp_path / "cmp"
    assert main(["compare", str(absolute), str(disentangled), "--out", str(out)]) == 0
    table = pd.read_csv(out / "comparison.csv")
    assert table["attention_mode"].tolist() == ["absolute", "disentangled"]
    assert {"accuracy", "precision", "recall", "f1", "auc", "lime_top_ransomware"} <= set(table.columns)
    assert json.loads((out / "comparison.json").read_text(encoding="utf-8"))[0]["run"] == str(absolute)


def test_missing_inputs_exit_with_config_error(tmp_path: Path):
    config = tmp_path / "missing.env"
    config.write_text(f"INPUTS={tmp_path / 'absent.csv'}\n", encoding="utf-8")
    assert main(["prepare", "--config", str(config), "--out", str(tmp_path / "run")]) == 2


def test_bad_config_value_exits_2(run_config: Path):
    assert main(["prepare", "--config", str(run_config), "--epochs", "0"]) == 2


@pytest.mark.parametrize("stage", ["train", "evaluate", "explain", "report"])
def test_missing_run_artifacts_exit_3(stage: str, tmp_path: Path):
    """
    Tests that a stage run against an empty directory reports a data error.
    """
    assert main([stage, "--out", str(tmp_path / "empty")]) == 3


def test_unknown_command_is_rejected():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["bogus"])
