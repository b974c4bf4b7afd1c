"""CSV emission with a fixed numeric format shared by every writer."""

import csv
import numbers


def format_cell(value):
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, numbers.Integral):
        return str(int(value))
    if isinstance(value, numbers.Real):
        return f"{float(value):.12g}"
    return str(value)


def write_csv(path, header, rows):
    """Write rows as UTF-8 comma-separated values, floats at 12 significant digits."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_cell(cell) for cell in row])
