"""Provenance-stamped CSV/JSON emission.

Every output file embeds the fully resolved configuration and the seed
that produced it, so a result can always be traced back to its inputs.
CSV files carry the provenance as leading '#' comment lines followed by
a regular header row; JSON files carry it under a "provenance" key.
Serialization is deterministic: keys are sorted and floats use a fixed
general format, so identical runs produce byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path


def _jsonable(value):
    import numpy as np

    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, Path):
        return str(value)
    if hasattr(value, "value") and hasattr(value, "name") and not isinstance(value, type):
        # enums
        return value.value
    return value


def provenance(config_resolved: dict, **extra) -> dict:
    out = {"config": _jsonable(config_resolved)}
    out.update(_jsonable(extra))
    return out


def format_number(x) -> str:
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def write_csv(path, columns, rows, prov: dict) -> Path:
    """Write rows with '#'-prefixed provenance lines and a header row."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# provenance: {json.dumps(prov, sort_keys=True)}"]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(format_number(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_csv(path):
    """Read back a provenance-stamped CSV: (provenance, columns, rows)."""
    path = Path(path)
    prov = {}
    columns = None
    rows = []
    for line in path.read_text().splitlines():
        if not line.strip():
            continue
        if line.startswith("#"):
            body = line.lstrip("# ")
            if body.startswith("provenance:"):
                prov = json.loads(body.split("provenance:", 1)[1])
            continue
        if columns is None:
            columns = line.split(",")
            continue
        rows.append([float(v) for v in line.split(",")])
    if columns is None:
        raise ValueError(f"{path}: no header row found")
    return prov, columns, rows


def write_json(path, payload: dict, prov: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = {"provenance": prov}
    body.update(_jsonable(payload))
    path.write_text(json.dumps(body, sort_keys=True, indent=2) + "\n")
    return path
