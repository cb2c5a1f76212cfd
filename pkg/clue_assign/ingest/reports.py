"""Deterministic report tables in JSON or CSV.

A ``Table`` is an ordered list of columns and rows. Writers never depend on dict
ordering, locale or timestamps: JSON keys are sorted, floats are rounded to six
significant digits in both formats and list cells are joined with ``;`` in CSV.
Identical tables therefore produce byte-identical files.
"""

import csv
import enum
import io
import json
import logging
import math
import os
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..assign.scene import Assignment, Scene
from ..error.exceptions import ConfigError, ReportWriteError
from ..geometry import areas_array
from ..synth import size_bucket
from ..utils import format_significant, round_significant

logger = logging.getLogger(__name__)

Row = Mapping[str, object]


class ReportFormat(enum.StrEnum):
    JSON = "json"
    CSV = "csv"


@dataclass(frozen=True)
class Table:
    """Column names plus rows keyed by those names."""

    columns: tuple[str, ...]
    rows: tuple[Row, ...] = ()

    @classmethod
    def from_rows(cls, columns: Sequence[str], rows: Iterable[Row]) -> "Table":
        return cls(tuple(columns), tuple(rows))

    def __len__(self) -> int:
        return len(self.rows)


def _json_cell(value: object) -> object:
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return round_significant(value) if math.isfinite(value) else None
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_json_cell(v) for v in value]
    return str(value)


def _csv_cell(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_significant(float(value)) if math.isfinite(value) else ""
    if isinstance(value, (list, tuple, np.ndarray)):
        return ";".join(_csv_cell(v) for v in value)
    return str(value)


def render_report(table: Table, fmt: ReportFormat | str = ReportFormat.JSON) -> str:
    """Render a table to text.

    Raises:
        ConfigError: If ``fmt`` is not ``json`` or ``csv``

    Example:
        >>> print(render_report(Table(("bucket", "mean"), ({"bucket": "eS", "mean": 2 / 3},)), "csv"), end="")
        bucket,mean
        eS,0.666667
    """
    try:
        fmt = ReportFormat(fmt)
    except ValueError:
        raise ConfigError(
            f"Unknown report format '{fmt}'", fields={"format": f"must be one of {[f.value for f in ReportFormat]}"}
        ) from None

    if fmt == ReportFormat.JSON:
        payload = {
            "columns": list(table.columns),
            "rows": [{col: _json_cell(row.get(col)) for col in table.columns} for row in table.rows],
        }
        return json.dumps(payload, sort_keys=True, indent=2, allow_nan=False) + "\n"

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([_csv_cell(row.get(col)) for col in table.columns])
    return buf.getvalue()


def write_report(table: Table, path: str | os.PathLike[str], fmt: ReportFormat | str = ReportFormat.JSON) -> None:
    """Write a table to ``path``; identical tables give identical bytes.

    Raises:
        ConfigError: If ``fmt`` is unknown
        ReportWriteError: If the file cannot be written
    """
    text = render_report(table, fmt)
    try:
        Path(path).write_bytes(text.encode("utf-8"))
    except OSError as e:
        raise ReportWriteError(f"cannot write {os.fspath(path)}: {e}", path=os.fspath(path)) from e
    logger.info("Wrote %d rows to %s", len(table), os.fspath(path))


def sibling_path(path: str | os.PathLike[str], suffix: str) -> Path:
    """``out.csv`` with suffix ``cov`` becomes ``out_cov.csv``."""
    p = Path(path)
    return p.with_name(f"{p.stem}_{suffix}{p.suffix}")


PREDICTION_COLUMNS = ("assigner", "image_id", "pred_index", "verdict", "gt_index", "confidence")
GT_COLUMNS = ("assigner", "image_id", "gt_index", "label", "absolute_size", "bucket", "threshold", "positives")
REJECTION_COLUMNS = ("source", "index", "record_id", "reason")


def assignment_tables(assigner: str, scenes: Sequence[Scene], assignments: Sequence[Assignment]) -> tuple[Table, Table]:
    """Per-prediction verdict rows and per-ground-truth positive lists."""
    pred_rows: list[dict[str, object]] = []
    gt_rows: list[dict[str, object]] = []
    for position, (scene, result) in enumerate(zip(scenes, assignments, strict=True)):
        image_id = scene.image_id if scene.image_id is not None else position
        for record in result.to_records():
            pred_rows.append(
                {
                    "assigner": assigner,
                    "image_id": image_id,
                    "pred_index": record["index"],
                    "verdict": record["verdict"],
                    "gt_index": record["gt_index"],
                    "confidence": record["confidence"],
                }
            )
        areas = areas_array(scene.gt_array)
        for g, positives in enumerate(result.per_gt_positives):
            gt_rows.append(
                {
                    "assigner": assigner,
                    "image_id": image_id,
                    "gt_index": g,
                    "label": scene.gt_labels[g],
                    "absolute_size": math.sqrt(float(areas[g])),
                    "bucket": size_bucket(float(areas[g])).value,
                    "threshold": result.thresholds[g],
                    "positives": list(positives),
                }
            )
    return Table.from_rows(PREDICTION_COLUMNS, pred_rows), Table.from_rows(GT_COLUMNS, gt_rows)

