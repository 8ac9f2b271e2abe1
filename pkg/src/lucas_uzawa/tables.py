"""CSV helpers: shortest round-trip floats, ``-inf`` written literally."""
import csv
import math


def format_value(x):
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    if isinstance(x, str):
        return x
    return repr(float(x))


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(x) for x in row])


def read_csv(path):
    """Rows as dicts of floats (empty cells become NaN)."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return [{k: (float(v) if v != "" else math.nan) for k, v in row.items()}
                for row in reader]
