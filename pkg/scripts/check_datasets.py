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
"""Checks that the user-supplied datasets are present and loadable."""

import os
import sys
from pathlib import Path

from ransomtrace.errors import DataError
from ransomtrace.ingest import concat_datasets, fit_imputer, load_csv

DATASETS = {"PM.csv": "process_memory", "UGRansome.csv": "network_traffic"}


def check_dataset(path: Path, source: str):
    """Loads one dataset, returning it or None when it is missing or unreadable."""
    if not path.is_file():
        print(f"{path}: not found", file=sys.stderr)
        return None
    try:
        dataset = load_csv(path, source=source)
    except DataError as e:
        print(f"{path}: {e}", file=sys.stderr)
        return None
    counts = {int(c): int((dataset.labels == c).sum()) for c in (0, 1)}
    print(f"{path}: {len(dataset)} rows, class counts {counts}")
    return dataset


def main():
    """Loads every dataset and prints the merged-data medians."""
    data_dir = Path(os.environ.get("RANSOMTRACE_DATA_DIR", "data"))
    print(f"--- Checking datasets in {data_dir} ---")
    loaded = [check_dataset(data_dir / name, source) for name, source in DATASETS.items()]
    if any(d is None for d in loaded):
        print("--- Some datasets are missing; integration tests will skip. ---", file=sys.stderr)
        sys.exit(1)

    imputer = fit_imputer(concat_datasets(loaded))
    for column, median in sorted(imputer.numeric_fill.items()):
        print(f"median {column}: {median}")
    print("--- Datasets are ready! ---")


if __name__ == "__main__":
    main()
