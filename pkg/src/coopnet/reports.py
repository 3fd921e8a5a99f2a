"""Report writers.  Every output carries the effective config in its header."""

from __future__ import annotations

import csv
import json
import math
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__

TIMESTAMP_KEY = "generated_at"


def config_header(command: str, config: dict) -> list[str]:
    return [
        f"coopnet {__version__} {command}",
        "config: " + json.dumps(config, sort_keys=True, default=_jsonable),
    ]


def read_config_header(path) -> dict:
    """Recover the config embedded in a CSV/edge-list/cover header."""
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            body = line[1:].strip()
            if body.startswith("config: "):
                return json.loads(body[len("config: "):])
    raise ValueError(f"{path}: no embedded config header")


def _jsonable(obj):
    if hasattr(obj, "tolist"):
        return obj.tolist()
    if hasattr(obj, "item"):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def write_json(path, command: str, config: dict, body: dict) -> None:
    doc = {"command": command, "version": __version__, "config": config, **body}
    doc[TIMESTAMP_KEY] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    Path(path).write_text(json.dumps(doc, indent=2, default=_jsonable) + "\n", encoding="utf-8")


def canonical_json(path) -> dict:
    """Report contents without the timestamp, for reproducibility checks."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    doc.pop(TIMESTAMP_KEY, None)
    return doc


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return "" if math.isnan(v) else repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


def write_csv(path, command: str, config: dict, fieldnames: Sequence[str], rows: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in config_header(command, config):
            fh.write(f"# {line}\n")
        w = csv.DictWriter(fh, fieldnames=list(fieldnames), lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: _cell(v) for k, v in row.items()})


def read_csv(path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(line for line in fh if not line.startswith("#")))
