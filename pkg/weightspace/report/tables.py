"""
CSV tables. Floats are written with a fixed number of significant digits so that identical runs produce
byte-identical files.
"""

__all__ = ["FLOAT_DIGITS", "format_value", "read_table", "write_table"]

import csv
import math
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path

FLOAT_DIGITS: int = 8


def format_value(value: object) -> str:
    match value:
        case None:
            return ""
        case bool():
            return str(value).lower()
        case float() if math.isnan(value):
            return "nan"
        case float():
            return f"{value:.{FLOAT_DIGITS}g}"
        case _:
            return str(value)


def write_table(path: Path, columns: Sequence[str], rows: Iterable[Mapping[str, object]]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as stream:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(row.get(column)) for column in columns])
    return path


def read_table(path: Path) -> list[dict[str, str]]:
    with path.open(newline="", encoding="utf-8") as stream:
        return list(csv.DictReader(stream))
