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
"""Run-directory I/O: deterministic JSON/CSV text, concurrent writes, manifests."""

import asyncio
import hashlib
import json
import logging
from collections.abc import Mapping
from pathlib import Path
from typing import Any

import aiofiles
import pandas as pd
from pydantic import BaseModel

from .data_model import ArtifactEntry, RunManifest
from .errors import DataError

_logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"

Content = str | bytes


def to_json(obj: Any) -> str:
    """Sorted-key, two-space JSON with a trailing newline."""
    if isinstance(obj, BaseModel):
        obj = obj.model_dump(mode="json", by_alias=True)
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def to_csv(frame: pd.DataFrame, index: bool = False) -> str:
    return frame.to_csv(index=index, lineterminator="\n")


async def _write_one(path: Path, content: Content) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(content, bytes):
        async with aiofiles.open(path, "wb") as f:
            await f.write(content)
    else:
        async with aiofiles.open(path, "w", encoding="utf-8", newline="") as f:
            await f.write(content)


async def write_artifacts_async(run_dir: Path | str, files: Mapping[str, Content]) -> list[Path]:
    """Writes every ``relative path -> content`` pair concurrently."""
    root = Path(run_dir)
    paths = [root / name for name in files]
    await asyncio.gather(*(_write_one(p, c) for p, c in zip(paths, files.values())))
    return paths


def write_artifacts(run_dir: Path | str, files: Mapping[str, Content]) -> list[Path]:
    paths = asyncio.run(write_artifacts_async(run_dir, files))
    _logger.info("wrote %d artifacts to %s", len(paths), run_dir)
    return paths


def require(run_dir: Path | str, *names: str) -> None:
    """Raises DataError listing every named artifact missing from ``run_dir``."""
    missing = [n for n in names if not (Path(run_dir) / n).exists()]
    if missing:
        raise DataError(f"missing inputs in {run_dir}: {', '.join(missing)}")


def read_json(run_dir: Path | str, name: str) -> Any:
    require(run_dir, name)
    return json.loads((Path(run_dir) / name).read_text(encoding="utf-8"))


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def build_manifest(
    run_dir: Path | str,
    *,
    tool_version: str,
    command: str,
    config: dict,
    seeds: dict[str, int],
    timing_seconds: dict[str, float] | None = None,
) -> RunManifest:
    """Lists every file under ``run_dir`` except the manifest, sorted by path."""
    root = Path(run_dir)
    entries = [
        ArtifactEntry(
            path=p.relative_to(root).as_posix(),
            sha256=sha256_file(p),
            bytes=p.stat().st_size,
        )
        for p in sorted(root.rglob("*"))
        if p.is_file() and p.name != MANIFEST_NAME
    ]
    return RunManifest(
        tool_version=tool_version,
        command=command,
        config=config,
        seeds=seeds,
        artifacts=entries,
        timing_seconds=timing_seconds or {},
    )


def write_manifest(run_dir: Path | str, manifest: RunManifest) -> Path:
    path = Path(run_dir) / MANIFEST_NAME
    path.write_text(to_json(manifest), encoding="utf-8")
    return path
