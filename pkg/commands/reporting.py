"""JSON and CSV report writers."""
import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

import config

logger = logging.getLogger(__name__)


@dataclass
class CommandOutput:
    """What a handler hands back to the CLI: the JSON result and an optional CSV table."""

    result: Dict[str, Any]
    csv_header: Optional[List[str]] = None
    csv_rows: List[List[Any]] = field(default_factory=list)


def _to_json(value: Any):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (set, frozenset)):
        return sorted(value)
    if hasattr(value, "as_dict"):
        return value.as_dict()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def _finite(value: Any):
    """Non-finite floats as strings, so the output stays strict JSON."""
    if isinstance(value, float) and not math.isfinite(value):
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    if isinstance(value, dict):
        return {str(k): _finite(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite(v) for v in value]
    return value


def render_json(payload: Dict[str, Any]) -> str:
    plain = json.loads(json.dumps(payload, default=_to_json))
    return json.dumps(_finite(plain), indent=2, sort_keys=True, allow_nan=False) + "\n"


def envelope(command: str, run_config: Dict[str, Any], result: Dict[str, Any]) -> Dict[str, Any]:
    """Common report layout: the exact run config and the code version next to the result."""
    return {"command": command, "config": run_config, "version": config.VERSION, "result": result}


def resolve_output(out, default_name: str) -> Path:
    """Bare file names land in REPORTS_DIR; paths with a directory are used as given."""
    if out is None:
        return config.REPORTS_DIR / default_name
    path = Path(out)
    if path.parent == Path("."):
        return config.REPORTS_DIR / path
    return path


def write_json(path: Path, payload: Dict[str, Any]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as f:
        f.write(render_json(payload))
    logger.info(f"Report written to {path}")
    return path


def write_csv(path: Path, header: Sequence[str], rows: List[Sequence[Any]]) -> Path:
    """RFC 4180: header row, minimal quoting, CRLF line endings."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_csv_cell(v) for v in row])
    logger.info(f"CSV written to {path} ({len(rows)} rows)")
    return path


def _csv_cell(value: Any):
    if isinstance(value, float):
        if not math.isfinite(value):
            return "inf" if value > 0 else ("-inf" if value < 0 else "nan")
        return repr(value)
    if isinstance(value, np.generic):
        return _csv_cell(value.item())
    return value
