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

import math

import numpy as np
import pandas as pd
import pytest

from synthetic import EXPECTED_MEDIANS
from ransomtrace.data_model import ColumnSpec, ImputationModel
from ransomtrace.errors import FitError, SchemaError, SplitError
from ransomtrace.ingest import (
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
    write_csv,
)

# --- Fixtures ---


def write(tmp_path, text: str, name: str = "data.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def labelled(x, labels, categorical=None) -> Dataset:
    columns = [ColumnSpec(name="x", kind="numeric")]
    data = {"x": np.asarray(x, dtype=np.float64)}
    if categorical is not None:
        columns.append(ColumnSpec(name="protocol", kind="categorical"))
        data["protocol"] = pd.Series(categorical, dtype=object)
    columns.append(ColumnSpec(name="label", kind="categorical", role="label"))
    labels = np.asarray(labels, dtype=np.int64)
    return Dataset(
        columns=columns,
        frame=pd.DataFrame(data),
        labels=labels,
        source=np.full(len(labels), "test", dtype=object),
    )


@pytest.fixture
def merged(dataset_csvs) -> Dataset:
    pm_path, ug_path = dataset_csvs
    return concat_datasets(
        [
            load_csv(pm_path, source="process_memory"),
            load_csv(ug_path, source="network_traffic"),
        ]
    )


# --- load_csv / unify_labels ---


def test_load_csv_parses_missing_cells(tmp_path):
    """
    Tests that an empty cell becomes missing and labels map to 0/1.
    """
    ds = load_csv(write(tmp_path, "rw,label\n73,Benign\n,Ransomware\n"))
    assert ds.numeric_features() == ["rw"]
    assert ds.frame["rw"].iloc[0] == 73.0
    assert math.isnan(ds.frame["rw"].iloc[1])
    assert ds.labels.tolist() == [0, 1]
    assert ds.label_column.name == "label"
    assert "label" not in ds.frame.columns


@pytest.mark.parametrize("marker", ["NaN", "nan", "null", "NULL", " "])
def test_load_csv_missing_markers(tmp_path, marker):
    ds = load_csv(write(tmp_path, f"rw,label\n{marker},Benign\n1,Ransomware\n"))
    assert math.isnan(ds.frame["rw"].iloc[0])


def test_load_csv_source_defaults_to_file_stem(tmp_path):
    ds = load_csv(write(tmp_path, "rw,label\n1,Benign\n2,Ransomware\n", name="PM.csv"))
    assert set(ds.source) == {"PM"}
    ds = load_csv(write(tmp_path, "rw,label\n1,Benign\n2,Ransomware\n"), source="process_memory")
    assert set(ds.source) == {"process_memory"}


def test_load_csv_two_sources_shape(dataset_csvs):
    """
    Tests that the process-memory and network-traffic files stack into ten numeric features.
    """
    pm_path, ug_path = dataset_csvs
    pm = load_csv(pm_path)
    ug = load_csv(ug_path)
    assert len(pm.numeric_features()) == 6
    assert ug.categorical_features() == ["protocol"]
    assert ug.label_column.name == "prediction"
    merged = concat_datasets([pm, ug])
    assert len(merged.numeric_features()) == 10
    assert len(merged) == len(pm) + len(ug)


def test_prediction_column_becomes_label(tmp_path):
    ds = load_csv(write(tmp_path, "usd,prediction\n1,Benign\n2,Ransomware\n"))
    assert ds.label_column.name == "prediction"
    assert ds.labels.tolist() == [0, 1]


def test_label_wins_over_prediction(tmp_path):
    """
    Tests that the first candidate is promoted and the other is ignored.
    """
    ds = load_csv(
        write(tmp_path, "x,label,prediction\n1,Benign,Ransomware\n2,Ransomware,Benign\n")
    )
    assert ds.labels.tolist() == [0, 1]
    roles = {c.name: c.role for c in ds.columns}
    assert roles["prediction"] == "ignore"
    assert "prediction" not in [c.name for c in ds.feature_columns()]


def test_label_mapping_is_case_insensitive(tmp_path):
    ds = load_csv(write(tmp_path, "x,Label\n1,BENIGN\n2,ransomware\n3,Benign\n"))
    assert ds.labels.tolist() == [0, 1, 0]


def test_label_spellings_count_as_one_class(tmp_path):
    """
    Tests that differently cased spellings of a label are one class, not several.
    """
    ds = load_csv(write(tmp_path, "rw,label\n1,Benign\n2,BENIGN\n3,Ransomware\n4, benign\n"))
    assert ds.labels.tolist() == [0, 0, 1, 0]


def test_third_label_after_case_folding_is_rejected(tmp_path):
    with pytest.raises(SchemaError, match="3 classes"):
        load_csv(write(tmp_path, "rw,label\n1,Benign\n2,RANSOMWARE\n3,worm\n4,ransomware\n"))


@pytest.mark.parametrize(
    "body",
    [
        "x,label\n1,Benign\n2,Ransomware\n3,Worm\n",
        "x,label\n1,Benign\n2,maybe\n",
        "x,label\n1,Benign\n2,\n",
        "x,y\n1,2\n3,4\n",
        "x,label\n1,Benign\n2\n",
    ],
)
def test_load_csv_schema_errors(tmp_path, body):
    with pytest.raises(SchemaError):
        load_csv(write(tmp_path, body))


def test_load_csv_missing_file(tmp_path):
    with pytest.raises(SchemaError):
        load_csv(tmp_path / "absent.csv")


def test_round_trip_is_bit_exact(tmp_path):
    """
    Tests that load -> write -> load preserves finite values exactly.
    """
    rng = np.random.default_rng(3)
    values = rng.normal(size=(50, 3)) * 1e3
    names = ["Benign", "Ransomware"]
    rows = [
        ",".join(repr(float(v)) for v in row) + "," + names[i % 2]
        for i, row in enumerate(values)
    ]
    rows[4] = ",0.5,-2.25,Benign"
    first = load_csv(write(tmp_path, "a,b,c,label\n" + "\n".join(rows) + "\n"))
    out = tmp_path / "out.csv"
    write_csv(first, out)
    second = load_csv(out)
    pd.testing.assert_frame_equal(first.frame, second.frame, check_exact=True)
    np.testing.assert_array_equal(first.labels, second.labels)


# --- imputation ---


def test_merged_medians(merged):
    model = fit_imputer(merged)
    for column, median in EXPECTED_MEDIANS.items():
        assert model.numeric_fill[column] == median


def test_odd_count_median_and_mode():
    ds = labelled([1, 2, np.nan, 4], [0, 1, 0, 1], categorical=["tcp", "tcp", "udp", None])
    model = fit_imputer(ds)
    assert model.numeric_fill["x"] == 2.0
    assert model.categorical_fill["protocol"] == "tcp"


def test_mode_ties_break_lexicographically():
    ds = labelled([1, 2, 3, 4], [0, 1, 0, 1], categorical=["udp", "tcp", "udp", "tcp"])
    assert fit_imputer(ds).categorical_fill["protocol"] == "tcp"


def test_median_matches_sort_oracle():
    """
    Tests the median fill against a brute-force sort on random arrays.
    """
    rng = np.random.default_rng(11)
    for n in (1, 2, 7, 100, 10_000):
        x = rng.normal(size=n)
        x[rng.random(n) < 0.2] = np.nan
        if np.isnan(x).all():
            x[0] = 1.0
        present = np.sort(x[~np.isnan(x)])
        k = present.size
        oracle = present[k // 2] if k % 2 else (present[k // 2 - 1] + present[k // 2]) / 2
        ds = labelled(x, np.arange(n) % 2)
        assert fit_imputer(ds).numeric_fill["x"] == pytest.approx(oracle, abs=1e-12)


def test_all_missing_column_names_it():
    ds = labelled([np.nan, np.nan], [0, 1])
    with pytest.raises(FitError, match="'x'"):
        fit_imputer(ds)


def test_apply_imputer_fills_and_is_idempotent(merged):
    model = fit_imputer(merged)
    once = apply_imputer(model, merged)
    assert not once.frame.isna().any().any()
    ug_rows = np.flatnonzero(merged.source == "network_traffic")
    assert (once.frame["rw"].iloc[ug_rows] == 73.0).all()
    twice = apply_imputer(model, once)
    pd.testing.assert_frame_equal(once.frame, twice.frame, check_exact=True)


def test_apply_imputer_usd_fill():
    ds = labelled([np.nan, 1.0], [0, 1])
    out = apply_imputer(ImputationModel(numeric_fill={"x": 3044.5}), ds)
    assert out.frame["x"].tolist() == [3044.5, 1.0]


def test_apply_imputer_without_missing_is_identity():
    ds = labelled([1.0, 2.0, 3.0], [0, 1, 0])
    out = apply_imputer(fit_imputer(ds), ds)
    pd.testing.assert_frame_equal(ds.frame, out.frame, check_exact=True)


def test_apply_imputer_uncovered_column():
    with pytest.raises(SchemaError):
        apply_imputer(ImputationModel(), labelled([1.0, 2.0], [0, 1]))


# --- reports ---


def test_missing_report(merged):
    report = missing_report(merged).set_index("column")
    assert report.loc["rw", "missing"] == 100
    assert report.loc["rw", "fraction"] == 0.5
    assert report.loc["usd", "missing"] == 100


def test_column_stats_median(merged):
    stats = column_stats(merged).set_index("column")
    assert stats.loc["rw", "50%"] == 73.0
    assert stats.loc["rw", "count"] == 100.0
    assert stats.loc["usd", "50%"] == 3044.5


def test_column_stats_by_source_skips_absent_columns(merged):
    """
    Tests that each source only reports the columns it carries.
    """
    stats = column_stats_by_source(merged)
    by_source = stats.groupby("source")["column"].apply(list).to_dict()
    assert by_source["process_memory"] == ["r", "rw", "rx", "rwc", "rxw", "rxwc"]
    assert by_source["network_traffic"] == ["usd", "btc", "netflow_bytes", "clusters"]
    assert stats.set_index(["source", "column"]).loc[("process_memory", "rw"), "count"] == 100.0


# --- sampling and splitting ---


def test_sample_rows_is_seeded():
    ds = labelled(np.arange(100), np.arange(100) % 2)
    a = sample_rows(ds, 10, seed=5)
    b = sample_rows(ds, 10, seed=5)
    assert len(a) == 10
    assert a.frame["x"].tolist() == b.frame["x"].tolist()
    assert a.frame["x"].tolist() == sorted(a.frame["x"].tolist())
    assert len(sample_rows(ds, 500, seed=5)) == 100


def test_split_sizes():
    """
    Tests that 2500 rows split 2000/250/250.
    """
    ds = labelled(np.arange(2500), (np.arange(2500) % 3 == 0).astype(int))
    split = stratified_split(ds, seed=0)
    assert (len(split.train), len(split.validation), len(split.test)) == (2000, 250, 250)
    assert sorted(split.train + split.validation + split.test) == list(range(2500))


def test_split_ten_rows():
    ds = labelled(np.arange(10), [0] * 5 + [1] * 5)
    split = stratified_split(ds, seed=3)
    test_labels = ds.labels[split.test]
    assert len(test_labels) == 1
    val_labels = ds.labels[split.validation]
    assert len(val_labels) == 1


def test_split_is_deterministic():
    ds = labelled(np.arange(300), np.arange(300) % 2)
    assert stratified_split(ds, seed=9) == stratified_split(ds, seed=9)
    assert stratified_split(ds, seed=9) != stratified_split(ds, seed=10)


def test_split_stratification_property():
    """
    Tests that every split's class-1 share is within one row of the global share.
    """
    rng = np.random.default_rng(0)
    for trial in range(20):
        n = int(rng.integers(50, 500))
        labels = (rng.random(n) < rng.uniform(0.2, 0.8)).astype(int)
        if min(labels.sum(), n - labels.sum()) < 5:
            continue
        ds = labelled(np.arange(n), labels)
        split = stratified_split(ds, seed=trial)
        share = labels.mean()
        for part in (split.train, split.validation, split.test):
            assert abs(labels[part].mean() - share) <= 1 / len(part) + 1e-12


def test_split_errors():
    ds = labelled(np.arange(10), [0] * 8 + [1] * 2)
    with pytest.raises(SplitError):
        stratified_split(ds)
    balanced = labelled(np.arange(10), [0] * 5 + [1] * 5)
    with pytest.raises(SplitError):
        stratified_split(balanced, fractions=(0.5, 0.5, 0.5))
