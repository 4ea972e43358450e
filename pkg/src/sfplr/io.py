"""CSV ingestion of mixed functional/scalar datasets and JSON report files.

Curves file: an optional first row of grid abscissae, then one curve per row.
Scalars file: a header of column names, one observation per row; the
response column is removed from it and the remaining columns become ``Z``.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .estimation import MixedDataset
from .fda import FunctionalSample, Grid
from .linearity import TestReport

__all__ = [
    "DatasetError",
    "DatasetFiles",
    "load_dataset",
    "write_dataset",
    "ReportFile",
    "write_report",
    "read_report",
    "SCHEMA_VERSION",
]

SCHEMA_VERSION = 1


class DatasetError(ValueError):
    """Malformed or inconsistent input files."""


@dataclass(frozen=True)
class DatasetFiles:
    """Locations of the files that make up one dataset.

    ``response_path`` is an alternative to ``response_column`` for
    functional-only models: a single-column file holding ``Y``.
    """

    curves_path: Path
    scalars_path: Path | None = None
    response_column: str | None = None
    response_path: Path | None = None
    grid_row: bool = True

    def __post_init__(self):
        for name in ("curves_path", "scalars_path", "response_path"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, Path(value))
        if self.scalars_path is not None and self.response_column is None:
            raise DatasetError("a scalars file needs a response column name")
        if self.scalars_path is None and self.response_path is None:
            raise DatasetError("supply either a scalars file with a response column or a response file")
        if self.scalars_path is not None and self.response_path is not None:
            raise DatasetError("give the response either as a column or as a file, not both")
        for path in (self.curves_path, self.scalars_path, self.response_path):
            if path is not None and not path.is_file():
                raise DatasetError(f"{path}: no such file")


def _read_rows(path: Path) -> list[tuple[int, list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [(i, row) for i, row in enumerate(csv.reader(fh), start=1) if any(c.strip() for c in row)]


def _parse_numeric(path: Path, rows, width: int | None = None) -> np.ndarray:
    out = []
    for line, row in rows:
        if width is not None and len(row) != width:
            raise DatasetError(f"{path}:{line}: expected {width} fields, found {len(row)}")
        values = []
        for col, cell in enumerate(row, start=1):
            try:
                v = float(cell)
            except ValueError:
                raise DatasetError(f"{path}:{line}: column {col}: cannot parse {cell!r} as a number") from None
            if not math.isfinite(v):
                raise DatasetError(f"{path}:{line}: column {col}: non-finite value {cell!r}")
            values.append(v)
        out.append(values)
        width = len(row)
    return np.array(out, dtype=np.float64)


def _load_curves(df: DatasetFiles) -> FunctionalSample:
    rows = _read_rows(df.curves_path)
    if not rows:
        raise DatasetError(f"{df.curves_path}: empty file")
    values = _parse_numeric(df.curves_path, rows)
    if df.grid_row:
        points, data = values[0], values[1:]
        if np.any(np.diff(points) <= 0):
            raise DatasetError(f"{df.curves_path}:{rows[0][0]}: grid row is not strictly increasing")
    else:
        data = values
        points = np.linspace(0.0, 1.0, values.shape[1])
    if data.shape[0] == 0:
        raise DatasetError(f"{df.curves_path}: no curves after the grid row")
    return FunctionalSample(Grid.from_points(points), data)


def load_dataset(df: DatasetFiles) -> MixedDataset:
    """Read and validate a dataset.

    Raises:
        DatasetError: On parse failures (with file and line), non-finite
            entries, a non-increasing grid, a missing response column, or
            disagreeing row counts.
    """
    X = _load_curves(df)
    if df.scalars_path is not None:
        rows = _read_rows(df.scalars_path)
        if not rows:
            raise DatasetError(f"{df.scalars_path}: empty file")
        header = [h.strip() for h in rows[0][1]]
        if df.response_column not in header:
            raise DatasetError(f"{df.scalars_path}: no column named {df.response_column!r}")
        values = _parse_numeric(df.scalars_path, rows[1:], width=len(header))
        values = values.reshape(len(rows) - 1, len(header))
        j = header.index(df.response_column)
        Y = values[:, j]
        keep = [i for i in range(len(header)) if i != j]
        Z = values[:, keep]
        names = tuple(header[i] for i in keep)
        source = df.scalars_path
    else:
        rows = _read_rows(df.response_path)
        if rows and len(rows[0][1]) == 1:
            try:
                float(rows[0][1][0])
            except ValueError:
                rows = rows[1:]  # header line
        Y = _parse_numeric(df.response_path, rows, width=1).reshape(-1)
        Z = np.empty((Y.size, 0))
        names = ()
        source = df.response_path
    if Y.size != X.n:
        raise DatasetError(f"row count mismatch: {df.curves_path} has {X.n} curves, {source} has {Y.size} rows")
    return MixedDataset(X=X, Z=Z, Y=Y, z_names=names)


def write_dataset(ds: MixedDataset, curves_path, scalars_path, response_column: str = "Y") -> DatasetFiles:
    """Write ``ds`` in the layout read by :func:`load_dataset`."""
    curves_path, scalars_path = Path(curves_path), Path(scalars_path)
    names = list(ds.z_names) if ds.z_names else [f"Z{j + 1}" for j in range(ds.p)]
    if response_column in names:
        raise DatasetError(f"response column {response_column!r} clashes with a covariate name")
    with open(curves_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([repr(float(v)) for v in ds.X.grid.points])
        for row in ds.X.data:
            w.writerow([repr(float(v)) for v in row])
    with open(scalars_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names + [response_column])
        for z, y in zip(ds.Z, ds.Y):
            w.writerow([repr(float(v)) for v in z] + [repr(float(y))])
    return DatasetFiles(curves_path, scalars_path, response_column=response_column)


@dataclass(frozen=True)
class ReportFile:
    """A test report together with provenance of the run."""

    report: TestReport
    tool_version: str
    runtime_seconds: float
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        d = {"schema_version": self.schema_version, "tool_version": self.tool_version}
        d.update(self.report.to_dict())
        d["runtime_seconds"] = self.runtime_seconds
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ReportFile":
        version = d.get("schema_version")
        if version != SCHEMA_VERSION:
            raise DatasetError(f"unsupported report schema version {version!r}")
        return cls(
            report=TestReport.from_dict(d),
            tool_version=d["tool_version"],
            runtime_seconds=float(d["runtime_seconds"]),
            schema_version=version,
        )


def write_report(rf: ReportFile, path) -> None:
    Path(path).write_text(json.dumps(rf.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_report(path) -> ReportFile:
    return ReportFile.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
