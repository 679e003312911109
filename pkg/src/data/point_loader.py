import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from loguru import logger

from src.core.point import PARAMETER_NAMES, EWPoint
from src.utils.exceptions import ConfigParse

CSV_FLOAT_FORMAT = "%.17g"


def point_from_json(document: Union[str, Dict[str, Any]]) -> EWPoint:
    """
    EW point from {"r_minus": ..., "r_plus": ..., "r": [r1, r2, r3]}

    r_minus and r default to 0 (qubit-style documents).
    """
    text = document if isinstance(document, str) else None
    if text is not None:
        try:
            document = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigParse(f"point is not valid JSON: {e.msg}", line=e.lineno) from e
    if not isinstance(document, dict):
        raise ConfigParse("point document must be a JSON object")
    if "r_plus" not in document:
        raise ConfigParse("point document is missing a required key", field="r_plus")

    for key in ("r_minus", "r_plus"):
        if key in document and (isinstance(document[key], bool) or not isinstance(document[key], (int, float))):
            raise ConfigParse(f"expected a number, got {document[key]!r}", field=key)
    r = document.get("r", [0.0, 0.0, 0.0])
    if not isinstance(r, list) or len(r) != 3:
        raise ConfigParse("'r' must be a list of three numbers", field="r")
    for i, value in enumerate(r):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigParse(f"expected a number, got {value!r}", field=f"r[{i}]")
    return EWPoint.from_document(document)


def _read_frame(path: Path) -> Tuple[pd.DataFrame, bool]:
    with open(path) as handle:
        first = handle.readline()
    has_header = any(name in first for name in PARAMETER_NAMES)
    frame = pd.read_csv(path, header=0 if has_header else None, comment="#", skip_blank_lines=True)
    if not has_header:
        frame.columns = list(PARAMETER_NAMES)[: len(frame.columns)] + list(frame.columns[len(PARAMETER_NAMES):])
    return frame, has_header


def points_from_csv(path: Union[str, Path]) -> List[EWPoint]:
    """
    Points from a CSV file with columns r_minus, r_plus, r1, r2, r3

    The header row is optional; extra columns (e.g. weight) are ignored.
    """
    path = Path(path)
    try:
        frame, has_header = _read_frame(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ConfigParse(f"cannot read points CSV {str(path)!r}: {e}") from e

    missing = [name for name in PARAMETER_NAMES if name not in frame.columns]
    if missing:
        raise ConfigParse(f"points CSV lacks columns {missing}", line=1, field=missing[0])

    offset = 2 if has_header else 1
    values = frame[list(PARAMETER_NAMES)].apply(pd.to_numeric, errors="coerce")
    bad = values.isna()
    if bad.values.any():
        row, column = np.argwhere(bad.values)[0]
        raise ConfigParse("expected a number", line=int(row) + offset, field=PARAMETER_NAMES[column])

    logger.info(f"Loaded {len(values)} point(s) from {path}")
    return [EWPoint.from_array(row) for row in values.to_numpy()]


def write_points_frame(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)
    logger.info(f"Wrote {len(frame)} point(s) to {path}")
    return path


def write_points_csv(
    points: Sequence[EWPoint],
    path: Union[str, Path],
    weights: Optional[Sequence[float]] = None,
) -> Path:
    """CSV with header r_minus, r_plus, r1, r2, r3[, weight]"""
    frame = pd.DataFrame([p.as_array() for p in points], columns=list(PARAMETER_NAMES))
    if weights is not None:
        frame["weight"] = np.asarray(weights, dtype=float)
    return write_points_frame(frame, path)
