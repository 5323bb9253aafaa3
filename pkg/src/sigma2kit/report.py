"""Deterministic JSON/CSV report emission.

Reports follow the bundled schema {command, inputs, outputs, residuals,
pass}; every float is printed with 17 significant digits so identical
runs produce byte-identical files.  No timestamps are written.
"""

from __future__ import annotations

import importlib.resources
import json
import math
from pathlib import Path

import numpy as np

SCHEMA_NAME = "report_schema.json"


class ReportSchemaError(ValueError):
    pass


def fmt17(x: float) -> str:
    """17-significant-digit decimal form (round-trips any double)."""
    if isinstance(x, float) and (math.isnan(x) or math.isinf(x)):
        return '"%s"' % repr(x)
    return format(float(x), ".17g")


def _canonical(obj, indent: int) -> str:
    pad = " " * indent
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (np.floating, float)):
        return fmt17(float(obj))
    if isinstance(obj, (np.integer, int)):
        return str(int(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [_canonical(v, indent + 2) for v in obj]
        inner = (",\n" + pad + "  ").join(items)
        return "[\n" + pad + "  " + inner + "\n" + pad + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            json.dumps(str(k)) + ": " + _canonical(v, indent + 2)
            for k, v in sorted(obj.items())
        ]
        inner = (",\n" + pad + "  ").join(items)
        return "{\n" + pad + "  " + inner + "\n" + pad + "}"
    raise TypeError(f"cannot serialize {type(obj)!r}")


def canonical_json(obj) -> str:
    return _canonical(obj, 0) + "\n"


def load_schema() -> dict:
    text = importlib.resources.files("sigma2kit").joinpath(
        "data", SCHEMA_NAME
    ).read_text()
    return json.loads(text)


_TYPE_MAP = {
    "object": dict,
    "string": str,
    "boolean": bool,
    "array": list,
}


def validate_report(report: dict, schema: dict | None = None) -> None:
    """Check required keys and basic types against the bundled schema."""
    if schema is None:
        schema = load_schema()
    if not isinstance(report, dict):
        raise ReportSchemaError("report must be an object")
    for key in schema.get("required", []):
        if key not in report:
            raise ReportSchemaError(f"missing required key {key!r}")
    for key, spec in schema.get("properties", {}).items():
        if key not in report:
            continue
        expected = _TYPE_MAP.get(spec.get("type"))
        if expected is not None and not isinstance(report[key], expected):
            raise ReportSchemaError(
                f"key {key!r} must have JSON type {spec['type']}"
            )
    if not schema.get("additionalProperties", True):
        extra = set(report) - set(schema.get("properties", {}))
        if extra:
            raise ReportSchemaError(f"unknown report keys {sorted(extra)}")


def make_report(command: str, inputs: dict, outputs: dict, residuals: dict,
                passed: bool) -> dict:
    report = {
        "command": command,
        "inputs": inputs,
        "outputs": outputs,
        "residuals": residuals,
        "pass": bool(passed),
    }
    validate_report(report)
    return report


def write_report(report: dict, path) -> Path:
    validate_report(report)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(canonical_json(report))
    return path


def write_csv(path, header, rows) -> Path:
    """CSV with 17-significant-digit numeric cells."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, (float, np.floating)):
                cells.append(format(float(v), ".17g"))
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")
    return path
