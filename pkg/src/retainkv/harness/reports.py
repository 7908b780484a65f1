"""Report files. JSON reports are ``{"header": ..., "data": ...}``; CSV reports open with
``# ``-prefixed header lines echoing the run configuration."""

import csv
import json
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any

from loguru import logger

from retainkv import __version__

SYNTHETIC_NOTE = "synthetic corpus: passkey haystacks over a filler vocabulary"


def report_header(**echo: Any) -> dict[str, Any]:
    return {"retainkv_version": __version__, **echo}


def write_json_report(path: str | Path, header: dict[str, Any], data: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps({"header": header, "data": data}, indent=2, sort_keys=True, default=str) + "\n")
    logger.info(f"Wrote report {path}")
    return path


def write_csv_report(
    path: str | Path, header: dict[str, Any], columns: Sequence[str], rows: Iterable[Sequence[Any]]
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        for key, value in sorted(header.items()):
            fh.write(f"# {key}: {json.dumps(value, sort_keys=True, default=str)}\n")
        writer = csv.writer(fh)
        writer.writerow(columns)
        writer.writerows(rows)
    logger.info(f"Wrote CSV {path}")
    return path


def read_csv_report(path: str | Path) -> tuple[list[str], list[dict[str, str]]]:
    """Header comment lines and the data rows of a CSV report."""
    lines = Path(path).read_text().splitlines()
    comments = [line[2:] for line in lines if line.startswith("# ")]
    body = [line for line in lines if not line.startswith("#")]
    return comments, list(csv.DictReader(body))
