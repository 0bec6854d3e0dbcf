"""Series persistence: one CSV row per frame plus a JSON metadata sidecar."""

import json
import logging
import math
from pathlib import Path
from typing import Any, Optional, Union

import pandas as pd

from ConeFlows.errors import SchemaVersionError
from ConeFlows.schemas import SERIES_SCHEMA_VERSION, BoundaryResiduals, DiagnosticsFrame, Series

LOGGER = logging.getLogger(__name__)
LOGGER.setLevel(logging.INFO)

RESIDUAL_FIELDS = list(BoundaryResiduals.model_fields)
KS2_COLUMNS = [f"ks2_l{order}" for order in range(4)]
SCALAR_FIELDS = [name for name in DiagnosticsFrame.model_fields if name not in ("ks2_l", "residuals")]
COLUMNS = SCALAR_FIELDS + KS2_COLUMNS + [f"residuals.{name}" for name in RESIDUAL_FIELDS]
FLOAT_FORMAT = "%.17g"


def sidecar_path(path: Union[str, Path]) -> Path:
    return Path(path).with_suffix(".meta.json")


def _frame_row(frame: DiagnosticsFrame) -> dict[str, Any]:
    row = {name: getattr(frame, name) for name in SCALAR_FIELDS}
    if row["gamma"] is None:
        row["gamma"] = math.nan
    row.update(zip(KS2_COLUMNS, frame.ks2_l))
    row.update({f"residuals.{name}": getattr(frame.residuals, name) for name in RESIDUAL_FIELDS})
    return row


def _row_frame(row: dict[str, Any]) -> DiagnosticsFrame:
    values = {name: row[name] for name in SCALAR_FIELDS}
    if values["gamma"] is not None and math.isnan(values["gamma"]):
        values["gamma"] = None
    values["ks2_l"] = [row[column] for column in KS2_COLUMNS]
    values["residuals"] = BoundaryResiduals(**{name: row[f"residuals.{name}"] for name in RESIDUAL_FIELDS})
    return DiagnosticsFrame(**values)


def write_series(series: Series, path: Union[str, Path], metadata: Optional[dict[str, Any]] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame([_frame_row(f) for f in series.frames], columns=COLUMNS)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)

    sidecar = {**series.metadata, **(metadata or {}), "schema_version": SERIES_SCHEMA_VERSION, "columns": COLUMNS}
    sidecar_path(path).write_text(json.dumps(sidecar, indent=2, sort_keys=True), encoding="utf-8")
    LOGGER.info("wrote %d frames to %s", len(series.frames), path)
    return path


def read_series(path: Union[str, Path]) -> Series:
    path = Path(path)
    metadata = json.loads(sidecar_path(path).read_text(encoding="utf-8"))
    version = metadata.get("schema_version")
    if version != SERIES_SCHEMA_VERSION:
        raise SchemaVersionError(f"{path}: series schema version {version} is not supported (expected {SERIES_SCHEMA_VERSION})")

    table = pd.read_csv(path, float_precision="round_trip")
    if list(table.columns) != COLUMNS:
        raise SchemaVersionError(f"{path}: columns do not match schema version {SERIES_SCHEMA_VERSION}")
    frames = [_row_frame(row) for row in table.astype(float).to_dict(orient="records")]
    metadata.pop("columns", None)
    return Series(frames=frames, metadata=metadata)
