"""CSV artifact writing and reading.

Every file starts with ``#``-prefixed header lines echoing the configuration
that produced it, followed by one column-name line and the data rows. Floats
are written with 17 significant digits so that files round-trip exactly.
"""

import csv
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

FLOAT_FORMAT = ".17g"

Cell = float | int | str | complex | np.generic


def format_value(value: object) -> str:
    """Render a scalar for CSV output at full precision."""
    if isinstance(value, bool | np.bool_):
        return str(bool(value)).lower()
    if isinstance(value, int | np.integer):
        return str(int(value))
    if isinstance(value, float | np.floating):
        return format(float(value), FLOAT_FORMAT)
    if isinstance(value, complex | np.complexfloating):
        z = complex(value)
        return f"{format(z.real, FLOAT_FORMAT)}{format(z.imag, '+' + FLOAT_FORMAT)}j"
    return str(value)


def header_lines(header: Mapping[str, object]) -> list[str]:
    """Format a flat mapping as ``# key = value`` lines."""
    return [f"# {key} = {format_value(value)}" for key, value in header.items()]


def write_csv(
    path: Path,
    header: Mapping[str, object],
    columns: Sequence[str],
    rows: Iterable[Sequence[Cell]],
) -> Path:
    """
    Write a CSV artifact.

    Args:
        path: Destination file, parent directories are created
        header: Configuration echo written as comment lines
        columns: Column names
        rows: Data rows, one value per column

    Returns:
        The path written
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        for line in header_lines(header):
            handle.write(line + "\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(value) for value in row])
    return path


def read_header(path: Path) -> dict[str, str]:
    """Read the ``# key = value`` header of a CSV artifact."""
    header: dict[str, str] = {}
    with path.open(encoding="utf-8") as handle:
        for line in handle:
            if not line.startswith("#"):
                break
            key, sep, value = line[1:].partition("=")
            if sep:
                header[key.strip()] = value.strip()
    return header


def read_table(path: Path) -> tuple[list[str], NDArray[np.float64]]:
    """
    Read a numeric CSV table, skipping comment lines.

    A first non-comment line that does not parse as numbers is taken as the
    column names.
    """
    columns: list[str] = []
    values: list[list[float]] = []
    with path.open(encoding="utf-8", newline="") as handle:
        reader = csv.reader(line for line in handle if not line.startswith("#"))
        for row in reader:
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                values.append([float(cell) for cell in row])
            except ValueError:
                if values or columns:
                    raise ValueError(f"non-numeric row in {path}: {row}") from None
                columns = [cell.strip() for cell in row]
    return columns, np.array(values, dtype=float)


def read_trace_csv(path: Path) -> tuple[NDArray[np.float64], NDArray[np.complex128]]:
    """
    Read boundary data given as ``x2, re_phi, im_phi`` rows.

    Returns:
        Heights sorted ascending and the complex values at those heights
    """
    _, table = read_table(path)
    if table.ndim != 2 or table.shape[1] != 3:
        raise ValueError(f"{path} must have three columns x2, re_phi, im_phi")
    order = np.argsort(table[:, 0], kind="stable")
    table = table[order]
    return table[:, 0], table[:, 1] + 1j * table[:, 2]


def write_summary(path: Path, header: Mapping[str, object], items: Mapping[str, object]) -> Path:
    """Write a plain-text ``key = value`` summary after the configuration echo."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        for line in header_lines(header):
            handle.write(line + "\n")
        for key, value in items.items():
            handle.write(f"{key} = {format_value(value)}\n")
    return path
