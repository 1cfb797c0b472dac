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
"""Export services for run records (training steps, epoch summaries).

The synchronous sinks serve the single-threaded training loop; the JSONL file
sink writes through an async class with an awaitable ``export``. Export
failures are logged and never propagate into the pipeline.
"""

import asyncio
import logging
from collections.abc import Iterable
from pathlib import Path
from typing import Protocol

import aiofiles
from pydantic import BaseModel

_logger = logging.getLogger(__name__)


class RecordSink(Protocol):
    def export(self, record: BaseModel) -> None: ...


# --- Logging Sink ---


class LoggingRecordSink:
    """Logs run records to the standard logger as they arrive."""

    def __init__(self, logger_name: str = "ransomtrace"):
        self._logger_name = logger_name
        self._logger = logging.getLogger(self._logger_name)

    def export(self, record: BaseModel) -> None:
        self._logger.info(record.model_dump_json())

    def close(self) -> None:
        pass


# --- JSONL File Sinks ---


class _BaseJsonlFileSink:
    """Base class for JSONL file sinks, holding shared configuration."""

    def __init__(self, file_path: Path | str):
        self._file_path = Path(file_path)


class AsyncJsonlFileRecordSink(_BaseJsonlFileSink):
    """Asynchronously appends run records to a JSON Lines file."""

    async def export(self, record: BaseModel) -> None:
        """Appends the record as a new line in the JSONL file.

        Args:
            record: Any pydantic run record.
        """
        await self.export_many([record])

    async def export_many(self, records: Iterable[BaseModel]) -> None:
        """Appends records in order with a single open of the file."""
        try:
            async with aiofiles.open(self._file_path, "a", encoding="utf-8") as f:
                await f.write("".join(r.model_dump_json() + "\n" for r in records))
        except Exception:
            _logger.exception("Failed to export run records to JSONL file.")


class JsonlFileRecordSink(_BaseJsonlFileSink):
    """Collects run records and appends them to a JSON Lines file on close.

    Records keep their export order, so two identical runs produce identical
    files. Usable as a context manager.
    """

    def __init__(self, file_path: Path | str, *, truncate: bool = True):
        """Initializes the sync JSONL file sink.

        Args:
            file_path: The path to the JSONL file.
            truncate: Start from an empty file instead of appending.
        """
        super().__init__(file_path)
        self._async_sink = AsyncJsonlFileRecordSink(self._file_path)
        self._buffer: list[BaseModel] = []
        if truncate:
            self._file_path.parent.mkdir(parents=True, exist_ok=True)
            self._file_path.write_text("", encoding="utf-8")

    def export(self, record: BaseModel) -> None:
        self._buffer.append(record)

    def close(self) -> None:
        """Flushes buffered records to disk."""
        if not self._buffer:
            return
        records, self._buffer = self._buffer, []
        asyncio.run(self._async_sink.export_many(records))

    def __enter__(self) -> "JsonlFileRecordSink":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


class FanOutRecordSink:
    """Forwards every record to several sinks."""

    def __init__(self, *sinks: RecordSink):
        self._sinks = sinks

    def export(self, record: BaseModel) -> None:
        for sink in self._sinks:
            sink.export(record)

    def close(self) -> None:
        for sink in self._sinks:
            close = getattr(sink, "close", None)
            if close is not None:
                close()
