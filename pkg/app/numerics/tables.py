"""
Two-column CSV tables (`t,x`, `omega,p`, `z,phi`) with a mandatory header row.
"""

import csv
import logging
from pathlib import Path
from typing import Sequence, Tuple, Union

import numpy as np

from app.errors import ConfigError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def read_columns(path: PathLike, header: Tuple[str, str]) -> Tuple[np.ndarray, np.ndarray]:
    """
    Read a two-column numeric CSV whose first row must equal `header`.

    Raises:
        ConfigError: missing file, wrong header, or rows that do not parse
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError("file not found", source=str(path))
    first: list = []
    second: list = []
    problems = []
    try:
        with path.open(newline="", encoding="utf-8") as handle:
            rows = list(csv.reader(handle))
    except UnicodeDecodeError as e:
        raise ConfigError(f"not UTF-8 text: {e}", source=str(path))
    except OSError as e:
        raise ConfigError(f"cannot read: {e}", source=str(path))
    found = rows[0] if rows else None
    if found is None or [cell.strip() for cell in found] != list(header):
        raise ConfigError(
            f"expected header {','.join(header)!r}, found {','.join(found) if found else 'nothing'!r}",
            source=str(path),
        )
    for line_number, row in enumerate(rows[1:], start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 2:
            problems.append(f"line {line_number}: expected 2 columns, got {len(row)}")
            continue
        try:
            first.append(float(row[0]))
            second.append(float(row[1]))
        except ValueError:
            problems.append(f"line {line_number}: non-numeric value in {row}")
    if problems:
        raise ConfigError(problems, source=str(path))
    if not first:
        raise ConfigError("no data rows", source=str(path))
    a = np.asarray(first)
    b = np.asarray(second)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ConfigError("non-finite values", source=str(path))
    logger.debug(f"[Tables] read {a.size} rows from {path}")
    return a, b


def write_columns(path: PathLike, header: Tuple[str, str], first: Sequence[float], second: Sequence[float]) -> None:
    """
    Write two columns with full round-trip precision.

    Raises:
        ConfigError: the file cannot be created (missing directory, permissions)
    """
    path = Path(path)
    try:
        with path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(header)
            for a, b in zip(first, second):
                writer.writerow((repr(float(a)), repr(float(b))))
    except OSError as e:
        raise ConfigError(f"cannot write: {e}", source=str(path))
    logger.debug(f"[Tables] wrote {len(first)} rows to {path}")
