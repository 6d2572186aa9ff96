"""CSV output shared by every command: comma separated, LF line endings,
floats at a fixed number of significant digits."""

import csv
from numbers import Integral, Real
from pathlib import Path

from django.conf import settings


def format_cell(value, digits=settings.CSV_SIGNIFICANT_DIGITS) -> str:
    if isinstance(value, Integral):
        return str(int(value))
    if isinstance(value, Real):
        return f"{float(value):.{digits}g}"
    return str(value)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_cell(value) for value in row])
    return path


def read_csv(path):
    with open(path, newline="") as handle:
        return list(csv.DictReader(handle))
