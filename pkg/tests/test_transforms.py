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

from ransomtrace.data_model import ColumnSpec, MinMaxScaler, PowerTransform
from ransomtrace.errors import DomainError, FitError, UndefinedSkewError
from ransomtrace.ingest import Dataset
from ransomtrace.transforms import (
    apply_minmax,
    apply_power_transform,
    apply_transforms,
    correlation_matrix,
    distribution_quantiles,
    fit_minmax,
    fit_power_transform,
    fit_scalers,
    fit_transforms,
    log_likelihood,
    skewness,
    transform_histograms,
    transform_report,
)


def numeric_dataset(**columns) -> Dataset:
    n = len(next(iter(columns.values())))
    specs = [ColumnSpec(name=name, kind="numeric") for name in columns]
    specs.append(ColumnSpec(name="label", kind="categorical", role="label"))
    return Dataset(
        columns=specs,
        frame=pd.DataFrame({k: np.asarray(v, dtype=np.float64) for k, v in columns.items()}),
        labels=np.arange(n) % 2,
        source=np.full(n, "synthetic", dtype=object),
    )


# --- skewness ---


def test_skewness_examples():
    assert skewness([1, 2, 3]) == 0.0
    assert skewness([0, 0, 0, 10]) == pytest.approx(2 / math.sqrt(3), abs=1e-12)


def test_skewness_mirrors_sign():
    """
    Tests that negating the data negates g1.
    """
    x = np.random.default_rng(1).lognormal(size=500)
    assert skewness(-x) == pytest.approx(-skewness(x), rel=1e-12)


@pytest.mark.parametrize("values", [[5, 5, 5], [1, 2], [1.0, np.nan, 2.0]])
def test_skewness_undefined(values):
    with pytest.raises(UndefinedSkewError):
        skewness(values)


# --- power transforms ---


def grid_best(method: str, values: np.ndarray) -> float:
    grid = np.round(np.arange(-5.0, 5.0 + 1e-9, 0.01), 2)
    return max(log_likelihood(method, g, values) for g in grid)


def test_normal_sample_yeo_johnson_near_identity():
    x = np.random.default_rng(0).standard_normal(10_000)
    t = fit_power_transform(x, column="z")
    assert t.method == "yeo_johnson"
    assert abs(t.lmbda - 1.0) < 0.15


def test_lognormal_sample_box_cox_near_log():
    x = np.exp(np.random.default_rng(0).standard_normal(10_000))
    t = fit_power_transform(x, column="z")
    assert t.method == "box_cox"
    assert abs(t.lmbda) < 0.15


def test_fitted_lambda_beats_grid():
    """
    Tests that the bounded search optimum is at least as likely as every grid point.
    """
    rng = np.random.default_rng(5)
    for values in (rng.lognormal(size=300), rng.normal(size=300) * 4 + 1):
        t = fit_power_transform(values)
        llf = log_likelihood(t.method, t.lmbda, values)
        assert llf >= grid_best(t.method, values) - 1e-6


def test_nonpositive_values_use_yeo_johnson():
    assert fit_power_transform([0.0, 1.0, 2.0, 5.0]).method == "yeo_johnson"
    assert fit_power_transform([-3.0, 1.0, 2.0, 9.0]).method == "yeo_johnson"


def test_fit_power_transform_rejects_constant():
    with pytest.raises(FitError):
        fit_power_transform([4.0, 4.0, 4.0], column="btc")


def test_apply_power_transform_examples():
    bc1 = PowerTransform(column="x", method="box_cox", lmbda=1.0)
    np.testing.assert_allclose(apply_power_transform(bc1, [1, 2, 3]), [0, 1, 2], atol=1e-12)
    bc0 = PowerTransform(column="x", method="box_cox", lmbda=0.0)
    np.testing.assert_allclose(apply_power_transform(bc0, [1, math.e]), [0, 1], atol=1e-12)
    yj2 = PowerTransform(column="x", method="yeo_johnson", lmbda=2.0)
    assert apply_power_transform(yj2, [-1.0])[0] == pytest.approx(-math.log(2), abs=1e-12)


def test_box_cox_domain_error():
    t = PowerTransform(column="x", method="box_cox", lmbda=0.5)
    with pytest.raises(DomainError):
        apply_power_transform(t, [1.0, 0.0])


def test_power_transform_is_monotone():
    rng = np.random.default_rng(2)
    for method, values in (("box_cox", rng.lognormal(size=200)), ("yeo_johnson", rng.normal(size=200))):
        for lmbda in (-2.0, -0.5, 0.0, 0.7, 2.0):
            x = np.sort(values)
            y = apply_power_transform(PowerTransform(column="x", method=method, lmbda=lmbda), x)
            assert np.all(np.diff(y) > 0)


# --- min-max ---


def test_minmax_examples():
    scaler = fit_minmax([2, 4, 6])
    np.testing.assert_array_equal(apply_minmax(scaler, [2, 4, 6]), [0.0, 0.5, 1.0])
    assert apply_minmax(scaler, [8])[0] == 1.5
    constant = fit_minmax([5, 5])
    np.testing.assert_array_equal(apply_minmax(constant, [5, 5]), [0.0, 0.0])


def test_minmax_training_values_in_unit_interval():
    x = np.random.default_rng(4).normal(size=1000) * 50
    out = apply_minmax(fit_minmax(x), x)
    assert out.min() == 0.0 and out.max() == 1.0


def test_minmax_scaler_rejects_inverted_bounds():
    with pytest.raises(ValueError):
        MinMaxScaler(column="x", min=2.0, max=1.0)


# --- reports ---


def test_lognormal_skew_reduced_over_seeds():
    """
    Tests that a heavily skewed lognormal column ends up nearly symmetric.
    """
    for seed in range(100):
        x = np.random.default_rng(seed).lognormal(sigma=1.0, size=1000)
        report = transform_report(numeric_dataset(x=x))
        (record,) = report.records
        assert record.skew_before > 2
        assert -0.5 < record.skew_after < 0.5
        assert not record.flagged


def test_symmetric_column_left_alone():
    x = np.random.default_rng(8).normal(size=5000)
    (record,) = transform_report(numeric_dataset(x=x)).records
    assert abs(record.skew_before) < 0.1
    assert record.skew_after == pytest.approx(record.skew_before, abs=0.05)


def test_constant_columns_not_transformed():
    ds = numeric_dataset(x=[1.0, 2.0, 9.0, 4.0], flat=[3.0, 3.0, 3.0, 3.0])
    assert set(fit_transforms(ds)) == {"x"}


def test_apply_transforms_scales_to_unit_interval():
    x = np.random.default_rng(9).lognormal(size=300)
    ds = numeric_dataset(x=x, flat=np.ones(300))
    transforms = fit_transforms(ds)
    out = apply_transforms(ds, transforms, fit_scalers(ds, transforms))
    assert out.frame["x"].min() == 0.0
    assert out.frame["x"].max() == 1.0
    assert (out.frame["flat"] == 0.0).all()
    # monotone, so the ordering of rows is preserved
    np.testing.assert_array_equal(np.argsort(out.frame["x"].to_numpy()), np.argsort(x))


def test_plot_tables():
    x = np.random.default_rng(10).lognormal(size=200)
    ds = numeric_dataset(x=x, y=x * 2 + 1)
    hist = transform_histograms(ds, fit_transforms(ds), bins=20)
    assert len(hist) == 2 * 2 * 20
    assert hist.groupby(["column", "stage"])["count"].sum().eq(200).all()
    corr = correlation_matrix(ds)
    assert corr.loc["x", "y"] == pytest.approx(1.0)
    quantiles = distribution_quantiles(ds).set_index("column")
    assert quantiles.loc["x", "q0"] == x.min()
    assert quantiles.loc["x", "q1"] == x.max()
