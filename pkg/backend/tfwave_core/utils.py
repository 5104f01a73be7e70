"""
Report export and configuration-file helpers.
"""

from __future__ import annotations

import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .errors import ConfigParseError
from .experiments import ErrorReport, StabilityResult

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.12e"


def parse_key_value(text: str, allowed_keys: Optional[Sequence[str]] = None) -> Dict[str, str]:
    """
    Parse a key=value document: one key per line, '#' starts a comment.

    Args:
        text: Document contents
        allowed_keys: When given, any other key is rejected

    Returns:
        Mapping of keys to raw string values, in file order

    Raises:
        ConfigParseError: malformed line, duplicate key or unknown key
    """
    allowed = set(allowed_keys) if allowed_keys is not None else None
    values: Dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigParseError(f"expected key=value, got '{line}'", line_number=number)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigParseError("empty key", line_number=number)
        if allowed is not None and key not in allowed:
            raise ConfigParseError(f"unknown key '{key}'", line_number=number, key=key)
        if key in values:
            raise ConfigParseError(f"duplicate key '{key}'", line_number=number, key=key)
        values[key] = value
    return values


def read_config_file(path: Union[str, Path], allowed_keys: Optional[Sequence[str]] = None) -> Dict[str, str]:
    """Read and parse a key=value configuration file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigParseError(f"cannot read {path}: {exc.strerror}") from exc
    return parse_key_value(text, allowed_keys)


def parse_float_list(value: str) -> List[float]:
    """'2^-4, 0.125, 1e-3' -> floats; powers written as base^exp are accepted."""
    out = []
    for item in value.split(","):
        item = item.strip()
        if not item:
            continue
        if "^" in item:
            base, exp = item.split("^", 1)
            out.append(float(base) ** float(exp))
        else:
            out.append(float(item))
    return out


def validate_ladder(levels: Sequence[float]) -> Tuple[bool, List[str]]:
    """
    Check a refinement ladder.

    Returns:
        Tuple of (is_valid, error_messages)
    """
    errors = []
    if len(levels) < 3:
        errors.append("ladder needs at least 3 levels")
    for i, level in enumerate(levels):
        if not math.isfinite(level) or level <= 0:
            errors.append(f"level {i} must be positive, got {level}")
    if len(set(levels)) != len(levels):
        errors.append("ladder levels must be distinct")
    return len(errors) == 0, errors


def write_frame(frame: pd.DataFrame, path: Path) -> Path:
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, na_rep="", lineterminator="\n")
    return path


def write_summary(out_dir: Union[str, Path], study: str, summary: Optional[Dict[str, Any]] = None) -> Path:
    """Write summary.json; non-finite floats become null."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    payload = {"study": study}
    payload.update(summary or {})
    path = out / "summary.json"
    with open(path, "w", encoding="utf-8") as f:
        json.dump(_jsonable(payload), f, ensure_ascii=False, indent=2)
    return path


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.floating, float)):
        return None if not math.isfinite(float(value)) else float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def export_report(
    report: Union[ErrorReport, StabilityResult],
    out_dir: Union[str, Path],
    *,
    study: str,
    summary: Optional[Dict[str, Any]] = None,
) -> Dict[str, Path]:
    """
    Write <study>.csv, <study>.timing.csv (ladder studies only) and summary.json.

    The results CSV holds no wall times so that it is byte-identical for a
    fixed configuration and seed.

    Returns:
        Written paths keyed by "results", "timing", "summary"
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: Dict[str, Path] = {}

    if isinstance(report, ErrorReport):
        written["results"] = write_frame(report.to_frame(), out / f"{study}.csv")
        written["timing"] = write_frame(report.timing_frame(), out / f"{study}.timing.csv")
    else:
        written["results"] = write_frame(report.to_frame(study), out / f"{study}.csv")

    written["summary"] = write_summary(out, study, summary)

    logger.info(f"report written: {', '.join(str(p) for p in written.values())}")
    return written
