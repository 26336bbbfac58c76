# coalition_utils/reports.py
import csv
import io
import json
import os
from typing import Any, Dict, Iterable, List, Optional, Sequence


def format_value(value: Any) -> str:
    """CSV cell text: 12 significant digits for floats, '.' decimal, no locale."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".12g")
    if value is None:
        return ""
    return str(value)


def rows_to_csv(rows: Sequence[Dict[str, Any]], columns: Optional[List[str]] = None) -> str:
    if columns is None:
        columns = []
        for row in rows:
            columns += [key for key in row if key not in columns]
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(row.get(col)) for col in columns])
    return buffer.getvalue()


def rows_to_json(payload: Any) -> str:
    return json.dumps(payload, indent=2) + "\n"


def rows_to_jsonl(records: Iterable[Dict[str, Any]]) -> str:
    return "".join(json.dumps(r) + "\n" for r in records)


def render(rows: Any, fmt: str, columns: Optional[List[str]] = None) -> str:
    if fmt == "json":
        return rows_to_json(rows)
    return rows_to_csv(rows, columns)


def write_text(text: str, path: Optional[str]) -> None:
    """Write ``text`` to ``path``, or to stdout when no path is given."""
    if path is None:
        print(text, end="")
        return
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(text)
