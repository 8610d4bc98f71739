"""Result tables and their CSV persistence.

Files carry ``#``-prefixed metadata lines (experiment tag, configuration
fingerprint, artifact version) before the header row.  Numeric cells are
written with 12 significant digits, which is tight enough for downstream
tolerance checks while keeping the files diffable; identical configurations
produce byte-identical files.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

__all__ = ["ResultTable", "read_csv", "ARTIFACT_VERSION"]

ARTIFACT_VERSION = "0.1.0"


def _format_cell(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


@dataclass
class ResultTable:
    columns: list[str]
    rows: list[tuple] = field(default_factory=list)
    tag: str = ""
    fingerprint: str = ""
    metadata: dict[str, str] = field(default_factory=dict)

    def append(self, *values) -> None:
        if len(values) != len(self.columns):
            raise ValueError(
                f"row has {len(values)} cells, table has {len(self.columns)} columns"
            )
        self.rows.append(tuple(values))

    def column(self, name: str) -> list:
        idx = self.columns.index(name)
        return [row[idx] for row in self.rows]

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        buf.write(f"# tag = {self.tag}\n")
        buf.write(f"# fingerprint = {self.fingerprint}\n")
        buf.write(f"# version = {ARTIFACT_VERSION}\n")
        for key, value in sorted(self.metadata.items()):
            buf.write(f"# {key} = {value}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_format_cell(v) for v in row])
        return buf.getvalue()

    def write_csv(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_csv_text(), encoding="utf-8")
        return path


def read_csv(path):
    """Parse a table written by :meth:`ResultTable.write_csv`.

    Returns ``(metadata, columns, rows)`` with numeric cells converted back
    to floats where possible.
    """
    metadata: dict[str, str] = {}
    columns: list[str] = []
    rows: list[list] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    key, _, value = body.partition("=")
                    metadata[key.strip()] = value.strip()
                continue
            reader = csv.reader([line])
            cells = next(reader)
            if not cells or not any(cells):
                continue
            if not columns:
                columns = cells
                continue
            parsed = []
            for cell in cells:
                try:
                    parsed.append(float(cell))
                except ValueError:
                    parsed.append(cell)
            rows.append(parsed)
    return metadata, columns, rows
