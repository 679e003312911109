import hashlib
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Union

import pandas as pd
from loguru import logger
from pydantic import BaseModel

from src.config.settings import settings
from src.data.point_loader import CSV_FLOAT_FORMAT
from src.regions.raster import RasterGrid
from src.schemas.reports import ReportEnvelope, RunConfig
from src.utils.exceptions import InvalidParameters

FORMATS = ("json", "csv", "pgm")


@dataclass
class CommandOutput:
    """What a subcommand produced: a report document, an optional table and an optional raster"""

    result: Any
    frame: Optional[pd.DataFrame] = None
    grid: Optional[RasterGrid] = None


def to_document(value: Any) -> Any:
    if isinstance(value, BaseModel):
        return value.model_dump(mode="json", by_alias=True)
    if isinstance(value, dict):
        return {k: to_document(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_document(v) for v in value]
    return value


def canonical_json(document: Any) -> str:
    return json.dumps(document, sort_keys=True, separators=(",", ":"), allow_nan=False)


def report_digest(config: RunConfig, result: Any) -> str:
    """SHA-256 of the canonical JSON of (command, arguments, result)"""
    payload = canonical_json({"command": config.command, "arguments": config.arguments, "result": result})
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def build_envelope(config: RunConfig, result: Any) -> Dict[str, Any]:
    document = to_document(result)
    envelope = ReportEnvelope(
        schema_version=settings.report_schema,
        command=config.command,
        config=config,
        digest=report_digest(config, document),
        result=document,
    )
    return envelope.model_dump(mode="json", by_alias=True)


def _write_text(text: str, path: Optional[Path]):
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="\n") as handle:
            handle.write(text)
    except OSError as e:
        raise InvalidParameters(f"cannot write report to {str(path)!r}: {e.strerror or e}") from e
    logger.info(f"Report written to {path}")


def emit_report(
    output: CommandOutput,
    fmt: str,
    path: Optional[Union[str, Path]],
    config: RunConfig,
):
    """
    Write a report as JSON, CSV or PGM; stdout when path is None

    JSON floats use the shortest round-trip representation, keys keep model order.
    PGM output also writes a JSON legend next to the image.

    Raises:
        InvalidParameters: unknown or unsupported format, unwritable path
    """
    if fmt not in FORMATS:
        raise InvalidParameters(f"format must be one of {FORMATS}, got {fmt!r}")
    path = Path(path) if path is not None else None

    if fmt == "json":
        text = json.dumps(build_envelope(config, output.result), indent=2, allow_nan=False) + "\n"
        _write_text(text, path)
    elif fmt == "csv":
        if output.frame is None:
            raise InvalidParameters(f"'{config.command}' has no tabular output; use --format json")
        _write_text(output.frame.to_csv(index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n"), path)
    else:
        if output.grid is None:
            raise InvalidParameters("--format pgm is only available for 'raster'")
        _write_text(output.grid.to_pgm(), path)
        if path is not None:
            legend = dict(output.grid.legend(), config=config.model_dump(mode="json"))
            _write_text(json.dumps(legend, indent=2) + "\n", path.with_suffix(".legend.json"))
