"""CSV output with a schema tag line.

Files start with `# gflow-csv-schema: <name>/v1`, then a header row, then
data rows. Floats are written with repr() so values round-trip exactly
and identical runs produce identical bytes.
"""

from __future__ import annotations

import csv
from pathlib import Path


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path, schema: str, columns, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        f.write(f"# gflow-csv-schema: {schema}/v1\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format(v) for v in row])


def read_csv(path):
    """Returns (schema, columns, rows-of-strings)."""
    with open(path, newline="") as f:
        first = f.readline().strip()
        prefix = "# gflow-csv-schema: "
        schema = first[len(prefix) :] if first.startswith(prefix) else None
        reader = csv.reader(f)
        columns = next(reader)
        return schema, columns, [row for row in reader]
