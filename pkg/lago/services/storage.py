"""Output directory management for experiment reports."""

import asyncio
import csv
import io
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import aiofiles

from lago.config import settings
from lago.core.container import MAP_SUFFIX, load_matrix, save_matrix
from lago.errors import DataError

logger = logging.getLogger(__name__)

REPORT_COLUMNS = (
    "seed",
    "sweep_param",
    "sweep_value",
    "method",
    "node",
    "label",
    "cosine",
    "test_rel_error",
    "objective",
    "max_violation",
)


def dumps_json(data: Any) -> str:
    """Deterministic JSON with sorted keys; non-finite floats become "inf", "-inf" or "nan"."""
    return json.dumps(_finite(data), indent=2, sort_keys=True, default=str, allow_nan=False) + "\n"


def _finite(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    if isinstance(value, dict):
        return {key: _finite(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite(item) for item in value]
    return value


def rows_to_csv(rows: Iterable[Dict[str, Any]], columns: Sequence[str] = REPORT_COLUMNS) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({key: _csv_value(row[key]) for key in columns})
    return buffer.getvalue()


def _csv_value(value: Any) -> Any:
    # repr keeps full float precision
    return repr(value) if isinstance(value, float) else value


class ReportStore:
    """Writes report files below one output directory."""

    def __init__(self, output_dir: Optional[Path] = None):
        self.output_dir = Path(output_dir or settings.output_dir)
        try:
            self.output_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise DataError(f"Cannot create output directory {self.output_dir}: {e}") from e

    def path(self, name: str) -> Path:
        return self.output_dir / name

    async def write_text(self, name: str, text: str) -> Path:
        """
        Write a text file below the output directory.

        Args:
            name: File name relative to the output directory
            text: File content

        Returns:
            Path to the written file
        """
        path = self.path(name)
        path.parent.mkdir(parents=True, exist_ok=True)
        async with aiofiles.open(path, "w", encoding="utf-8", newline="") as f:
            await f.write(text)
        logger.debug("wrote path=%s bytes=%d", path, len(text))
        return path

    async def write_json(self, name: str, data: Any) -> Path:
        return await self.write_text(name, dumps_json(data))

    async def write_csv(self, name: str, rows: List[Dict[str, Any]], columns: Sequence[str] = REPORT_COLUMNS) -> Path:
        return await self.write_text(name, rows_to_csv(rows, columns))

    async def save_maps(self, subdir: str, labels: Sequence[str], maps: Iterable[Any]) -> List[Path]:
        """Store one binary map file per node, ``W_<label>.lagomap``."""
        directory = self.path(subdir)

        def _save() -> List[Path]:
            directory.mkdir(parents=True, exist_ok=True)
            return [save_matrix(directory / f"W_{label}{MAP_SUFFIX}", W) for label, W in zip(labels, maps)]

        return await asyncio.get_running_loop().run_in_executor(None, _save)


def load_maps(directory: Path, labels: Sequence[str]) -> List[Any]:
    """Read the ``W_<label>.lagomap`` files written by save_maps."""
    directory = Path(directory)
    return [load_matrix(directory / f"W_{label}{MAP_SUFFIX}") for label in labels]
