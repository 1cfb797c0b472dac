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
"""Shared fixtures."""

from pathlib import Path

import pytest

from ransomtrace.data_model import ModelConfig, TrainConfig
from ransomtrace.model import init_model
from ransomtrace.nttp import build_vocab, tokenize
from ransomtrace.training import train
from synthetic import dataset_frames, planted_texts, with_noise


@pytest.fixture
def dataset_csvs(tmp_path: Path) -> tuple[Path, Path]:
    """PM.csv and UGRansome.csv with the process-memory and network-traffic columns."""
    pm, ug = dataset_frames()
    pm_path, ug_path = tmp_path / "PM.csv", tmp_path / "UGRansome.csv"
    pm.to_csv(pm_path, index=False)
    ug.to_csv(ug_path, index=False)
    return pm_path, ug_path


@pytest.fixture(scope="session")
def planted_data():
    """1000/200/200 planted-rule splits; 5% of training labels are flipped."""
    train_texts, train_labels = planted_texts(1000, seed=1)
    val_texts, val_labels = planted_texts(200, seed=2)
    test_texts, test_labels = planted_texts(200, seed=3)
    return {
        "train": (train_texts, with_noise(train_labels, 0.05, seed=4)),
        "validation": (val_texts, val_labels),
        "test": (test_texts, test_labels),
    }


@pytest.fixture(scope="session")
def planted_models(planted_data):
    """Trains one planted-rule model per attention mode on first use."""
    cache = {}

    def get(mode: str):
        if mode not in cache:
            vocab = build_vocab(planted_data["train"][0])

            def encode(split):
                texts, labels = planted_data[split]
                return [tokenize(vocab, t, 128, int(y)) for t, y in zip(texts, labels)]

            model = init_model(ModelConfig(attention_mode=mode, seed=0), len(vocab))
            model, history = train(
                model, encode("train"), encode("validation"), TrainConfig(epochs=3, seed=0)
            )
            cache[mode] = (model, vocab, history)
        return cache[mode]

    return get
