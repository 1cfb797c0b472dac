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
"""Unit tests for run configuration loading."""

from pathlib import Path

import pytest

from ransomtrace.config import InputSpec, RunConfig, load_config
from ransomtrace.errors import ConfigError

REPO_ROOT = Path(__file__).resolve().parents[1]


# --- Fixtures ---


@pytest.fixture
def config_file(tmp_path: Path) -> Path:
    path = tmp_path / "run.env"
    path.write_text(
        "# comment\n"
        "INPUTS=data/PM.csv:process_memory,data/UGRansome.csv\n"
        "SEED=7\n"
        "SAMPLE_N=\n"
        "SPLIT_FRACTIONS=0.6,0.2,0.2\n"
        "INCLUDE_CATEGORICALS=true\n"
        "ATTENTION_MODE=disentangled\n"
        "EPOCHS=3\n",
        encoding="utf-8",
    )
    return path


# --- Tests ---


def test_defaults_without_file():
    """
    Tests that load_config with no file returns the documented defaults.
    """
    config = load_config()
    assert config.seed == 0
    assert config.split_fractions == (0.8, 0.1, 0.1)
    assert config.attention_mode == "absolute"
    assert config.learning_rate == 3e-4
    assert config.explain_methods() == ["lime", "occlusion"]
    assert config.inputs == []


def test_file_values_are_parsed(config_file: Path):
    """
    Tests that list, bool, int and literal values are read from the file.
    """
    config = load_config(config_file)
    assert config.inputs == [
        InputSpec(path=Path("data/PM.csv"), source="process_memory"),
        InputSpec(path=Path("data/UGRansome.csv")),
    ]
    assert config.seed == 7
    assert config.sample_n is None
    assert config.split_fractions == (0.6, 0.2, 0.2)
    assert config.include_categoricals is True
    assert config.attention_mode == "disentangled"
    assert config.epochs == 3


def test_overrides_win_and_none_is_ignored(config_file: Path):
    """
    Tests that non-None overrides replace file values and None leaves them.
    """
    config = load_config(config_file, {"seed": 11, "epochs": None, "out": Path("elsewhere")})
    assert config.seed == 11
    assert config.epochs == 3
    assert config.out == Path("elsewhere")


def test_shipped_desk_config_loads():
    """
    Tests that the desk configuration in configs/ is valid.
    """
    config = load_config(REPO_ROOT / "configs" / "desk.env")
    assert [i.source for i in config.inputs] == ["process_memory", "network_traffic"]
    assert config.n_bins == 5
    assert config.to_model_config().n_heads == 4


def test_unknown_key_is_config_error(tmp_path: Path):
    path = tmp_path / "bad.env"
    path.write_text("LEARNING_RAET=0.1\n", encoding="utf-8")
    with pytest.raises(ConfigError, match="learning_raet"):
        load_config(path)


def test_missing_file_is_config_error(tmp_path: Path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "absent.env")


@pytest.mark.parametrize(
    "overrides",
    [
        {"split_fractions": (0.5, 0.2, 0.2)},
        {"split_fractions": (1.2, -0.1, -0.1)},
        {"epochs": 0},
        {"n_heads": 5},
        {"attention_mode": "relative"},
        {"explain_n_samples": 1},
        {"workers": 0},
        {"dropout_rate": 1.0},
    ],
)
def test_invalid_values_are_config_errors(overrides):
    """
    Tests that invalid run, model and training settings all surface as ConfigError.
    """
    with pytest.raises(ConfigError):
        load_config(None, overrides)


def test_config_error_exit_code():
    with pytest.raises(ConfigError) as excinfo:
        load_config(None, {"epochs": 0})
    assert excinfo.value.exit_code == 2


@pytest.mark.parametrize(
    "entry, path, source",
    [
        ("data/PM.csv:process_memory", Path("data/PM.csv"), "process_memory"),
        ("data/PM.csv", Path("data/PM.csv"), None),
        (" data/PM.csv: ", Path("data/PM.csv"), None),
    ],
)
def test_input_spec_parse(entry, path, source):
    spec = InputSpec.parse(entry)
    assert spec.path == path
    assert spec.source == source


@pytest.mark.parametrize(
    "method, expected",
    [("lime", ["lime"]), ("occlusion", ["occlusion"]), ("both", ["lime", "occlusion"])],
)
def test_explain_methods(method, expected):
    assert RunConfig(explain_method=method).explain_methods() == expected


def test_check_inputs(tmp_path: Path):
    """
    Tests that check_inputs requires at least one input and that all exist.
    """
    with pytest.raises(ConfigError, match="no inputs"):
        RunConfig().check_inputs()

    present = tmp_path / "PM.csv"
    present.write_text("a,label\n1,Benign\n", encoding="utf-8")
    RunConfig(inputs=[InputSpec(path=present)]).check_inputs()

    config = RunConfig(inputs=[InputSpec(path=present), InputSpec(path=tmp_path / "gone.csv")])
    with pytest.raises(ConfigError, match="gone.csv"):
        config.check_inputs()


def test_derived_configs_carry_the_seed():
    config = RunConfig(seed=5, d_model=16, n_heads=2, batch_size=4)
    assert config.to_model_config().seed == 5
    assert config.to_model_config().d_model == 16
    assert config.to_train_config().seed == 5
    assert config.to_train_config().batch_size == 4
