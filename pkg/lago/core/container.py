"""Matrix file formats: the LAGO binary container and CSV."""

import io
import struct
from pathlib import Path
from typing import Union

import numpy as np

from lago.errors import DataError


# Magic bytes
EMBEDDING_MAGIC = b"LAGOEMB1"
MAP_MAGIC = b"LAGOMAP1"

# magic + u32 rows + u32 cols
HEADER_SIZE = 8 + 4 + 4

EMBEDDING_SUFFIX = ".lagoemb"
MAP_SUFFIX = ".lagomap"


class MatrixContainer:
    """Binary container for a single float64 matrix."""

    def __init__(self, magic: bytes = EMBEDDING_MAGIC):
        if magic not in (EMBEDDING_MAGIC, MAP_MAGIC):
            raise ValueError(f"Unknown container magic: {magic!r}")
        self.magic = magic

    def serialize(self, matrix: np.ndarray) -> bytes:
        """Serialize a matrix to bytes."""
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2:
            raise DataError(f"Only 2-D matrices can be stored, got {matrix.ndim}-D")
        rows, cols = matrix.shape
        header = self.magic + struct.pack("<II", rows, cols)
        return header + np.ascontiguousarray(matrix, dtype="<f8").tobytes()

    def deserialize(self, data: bytes) -> np.ndarray:
        """
        Deserialize a matrix from bytes.

        Raises:
            DataError: On wrong magic, short header or truncated payload
        """
        if len(data) < HEADER_SIZE:
            raise DataError("Invalid LAGO matrix file: too short")

        # Check magic bytes
        if data[:8] != self.magic:
            raise DataError(
                f"Invalid LAGO matrix file: wrong magic bytes {data[:8]!r}, expected {self.magic!r}"
            )

        rows, cols = struct.unpack("<II", data[8:HEADER_SIZE])
        expected = HEADER_SIZE + 8 * rows * cols
        if len(data) != expected:
            raise DataError(
                f"Invalid LAGO matrix file: truncated payload ({len(data)} bytes, expected {expected})"
            )

        values = np.frombuffer(data, dtype="<f8", offset=HEADER_SIZE, count=rows * cols)
        return values.astype(np.float64).reshape(rows, cols)

    def write(self, path: Path, matrix: np.ndarray) -> None:
        Path(path).write_bytes(self.serialize(matrix))

    def read(self, path: Path) -> np.ndarray:
        try:
            data = Path(path).read_bytes()
        except OSError as e:
            raise DataError(f"Cannot read {path}: {e}") from e
        return self.deserialize(data)


def matrix_to_csv(matrix: np.ndarray) -> str:
    """Rows as CSV lines with round-trip precision."""
    buffer = io.StringIO()
    np.savetxt(buffer, np.asarray(matrix, dtype=np.float64), delimiter=",", fmt="%.17g")
    return buffer.getvalue()


def matrix_from_csv(text: str) -> np.ndarray:
    try:
        matrix = np.loadtxt(io.StringIO(text), delimiter=",", dtype=np.float64, ndmin=2)
    except ValueError as e:
        raise DataError(f"Invalid matrix CSV: {e}") from e
    return matrix


def load_matrix(path: Union[str, Path]) -> np.ndarray:
    """Load a matrix by extension: .csv, .lagoemb or .lagomap."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".csv":
        try:
            return matrix_from_csv(path.read_text(encoding="utf-8"))
        except OSError as e:
            raise DataError(f"Cannot read {path}: {e}") from e
    if suffix == MAP_SUFFIX:
        return MatrixContainer(MAP_MAGIC).read(path)
    return MatrixContainer(EMBEDDING_MAGIC).read(path)


def save_matrix(path: Union[str, Path], matrix: np.ndarray) -> Path:
    """Store a matrix; the format follows the extension."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".csv":
        path.write_text(matrix_to_csv(matrix), encoding="utf-8")
    elif suffix == MAP_SUFFIX:
        MatrixContainer(MAP_MAGIC).write(path, matrix)
    else:
        MatrixContainer(EMBEDDING_MAGIC).write(path, matrix)
    return path

