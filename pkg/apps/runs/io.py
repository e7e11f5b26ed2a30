"""
Matrix and report file I/O.

Matrix CSV format: no header, one matrix row per line, comma-separated
decimals. Values are written with 17 significant digits so every double
round-trips exactly. All writers go through a temporary file in the target
directory followed by os.replace, so readers never see a half-written file.
"""

import json
import logging
import math
import os
import tempfile
from pathlib import Path
from typing import Iterable, Union

import numpy as np

from apps.core.exceptions import ParseError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
FLOAT_FORMAT = '.17g'


def jsonable(value):
    """Replace non-finite floats (at any depth) by 'inf' / '-inf' / 'nan' strings."""
    if isinstance(value, float) and not math.isfinite(value):
        return 'nan' if math.isnan(value) else ('inf' if value > 0 else '-inf')
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, Path):
        return str(value)
    return value


def read_matrix(path: PathLike) -> np.ndarray:
    """
    Parse a matrix CSV.

    Raises:
        ParseError: unreadable file, empty file, ragged rows, or a non-numeric
            or non-finite field (with 1-based line and column)
    """
    path = str(path)
    try:
        with open(path, 'r', encoding='utf-8') as handle:
            lines = handle.read().splitlines()
    except OSError as e:
        raise ParseError(f"cannot read file ({e.strerror})", path=path)

    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise ParseError("file holds no rows", path=path)

    rows, width = [], None
    for line_no, line in enumerate(lines, start=1):
        fields = line.split(',')
        if width is None:
            width = len(fields)
        elif len(fields) != width:
            raise ParseError(f"expected {width} fields, found {len(fields)}", path=path, line=line_no)
        row = []
        for column, text in enumerate(fields, start=1):
            try:
                value = float(text)
            except ValueError:
                raise ParseError(f"not a number: {text.strip()!r}", path=path, line=line_no, column=column)
            if not math.isfinite(value):
                raise ParseError(f"non-finite value: {text.strip()!r}", path=path, line=line_no, column=column)
            row.append(value)
        rows.append(row)
    return np.array(rows, dtype=float)


def format_matrix(matrix) -> str:
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    return ''.join(','.join(format(value, FLOAT_FORMAT) for value in row) + '\n' for row in matrix)


def atomic_write(path: PathLike, text: str) -> Path:
    """Write text to path via a sibling temp file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, temp_name = tempfile.mkstemp(prefix=f'.{path.name}.', dir=str(path.parent))
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='\n') as handle:
            handle.write(text)
        os.replace(temp_name, path)
    except BaseException:
        if os.path.exists(temp_name):
            os.unlink(temp_name)
        raise
    return path


def write_matrix(path: PathLike, matrix) -> Path:
    return atomic_write(path, format_matrix(matrix))


def write_vector(path: PathLike, values) -> Path:
    """One value per line (a column CSV)."""
    return write_matrix(path, np.asarray(values, dtype=float).reshape(-1, 1))


def write_indices(path: PathLike, indices: Iterable[int]) -> Path:
    return atomic_write(path, ''.join(f"{int(i)}\n" for i in indices))


def write_json(path: PathLike, data) -> Path:
    """JSON report; floats keep Python's shortest round-trip repr."""
    return atomic_write(path, json.dumps(data, indent=2, allow_nan=False) + '\n')


def write_table(path: PathLike, header: Iterable[str], rows: Iterable[Iterable]) -> Path:
    """CSV with a header row; floats at round-trip precision, strings verbatim."""
    def cell(value):
        if isinstance(value, float):
            return format(value, FLOAT_FORMAT)
        return str(value)

    lines = [','.join(header)]
    lines.extend(','.join(cell(value) for value in row) for row in rows)
    return atomic_write(path, '\n'.join(lines) + '\n')
