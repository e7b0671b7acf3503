"""Deterministic JSON/TSV rendering of command reports.

Entropy-like quantities are wrapped with :func:`nats` by the commands so the
``--bits`` flag can convert exactly those values and nothing else.
"""
import json
import math
from fractions import Fraction
from typing import Any, Dict, List, Mapping, Tuple

import numpy as np

from Relent.vars import Var

FORMATS = ("json", "tsv")


class Nats(float):
    """A float measured in nats."""


def nats(value: Any) -> Any:
    if value is None:
        return None
    if isinstance(value, Mapping):
        return {k: nats(v) for k, v in value.items()}
    if isinstance(value, np.ndarray):
        value = value.tolist()
    if isinstance(value, (list, tuple)):
        return [nats(v) for v in value]
    return Nats(float(value))


def report_schema_version() -> str:
    return Var.SCHEMA_VERSION


def _plain(value: Any, bits: bool) -> Any:
    if isinstance(value, Nats):
        return float(value) / math.log(2) if bits else float(value)
    if isinstance(value, Mapping):
        return {str(k): _plain(v, bits) for k, v in value.items()}
    if isinstance(value, np.ndarray):
        return _plain(value.tolist(), bits)
    if isinstance(value, (list, tuple)):
        return [_plain(v, bits) for v in value]
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    return value


def _flatten(value: Any, prefix: str) -> List[Tuple[str, Any]]:
    if isinstance(value, dict):
        rows = []
        for key in sorted(value):
            rows.extend(_flatten(value[key], f"{prefix}.{key}" if prefix else key))
        return rows
    if isinstance(value, list) and any(isinstance(v, (dict, list)) for v in value):
        rows = []
        for i, item in enumerate(value):
            rows.extend(_flatten(item, f"{prefix}.{i}"))
        return rows
    if isinstance(value, list):
        return [(prefix, ",".join(json.dumps(v) if not isinstance(v, str) else v for v in value))]
    if isinstance(value, str):
        return [(prefix, value)]
    return [(prefix, json.dumps(value))]


def _envelope(command: str, parameters: Dict[str, Any], result: Any, bits: bool) -> Dict[str, Any]:
    return {
        "schema_version": report_schema_version(),
        "command": command,
        "unit": "bits" if bits else "nats",
        "parameters": _plain(parameters, bits=False),
        "result": _plain(result, bits),
    }


def render_report(
    command: str, parameters: Dict[str, Any], result: Any, fmt: str = "json", bits: bool = False
) -> str:
    report = _envelope(command, parameters, result, bits)
    if fmt == "tsv":
        return "key\tvalue\n" + "".join(f"{k}\t{v}\n" for k, v in _flatten(report, ""))
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def render_error(command: str, kind: str, message: str, fmt: str = "json") -> str:
    report = {
        "schema_version": report_schema_version(),
        "command": command,
        "error": {"type": kind, "message": message},
    }
    if fmt == "tsv":
        return "key\tvalue\n" + "".join(f"{k}\t{v}\n" for k, v in _flatten(report, ""))
    return json.dumps(report, sort_keys=True, indent=2) + "\n"
