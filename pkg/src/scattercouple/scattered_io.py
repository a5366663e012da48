"""Reading and writing the csvt file hierarchy.

A csvt dataset is three kinds of plain text files:

* a master file, one ``time,data-path`` record per time step (the columns
  are configurable). It may open with a single-field record naming the
  point-location file.
* a coordinates file, one source point per row.
* one data file per time step, one row per source point.

Fields are comma separated and whitespace-trimmed. Lines starting with ``#``
and blank lines are skipped everywhere.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Mapping, Sequence

import numpy as np

__all__ = [
    "ScatteredDataError",
    "ColumnMap",
    "ManifestEntry",
    "TimeSeriesManifest",
    "PointCloud",
    "FieldSnapshot",
    "ScatteredDataset",
    "parse_master_file",
    "parse_coordinates_file",
    "parse_data_file",
    "read_csvt",
    "write_field_csv",
    "write_points_csv",
    "format_float",
]

DOFS = ("x", "y", "z")


class ScatteredDataError(ValueError):
    """Malformed or inconsistent scattered data. Carries the offending file and line."""

    def __init__(self, message: str, path: str | os.PathLike | None = None, line: int | None = None):
        self.reason = message
        self.path = None if path is None else str(path)
        self.line = line
        where = ""
        if self.path is not None:
            where = self.path if line is None else f"{self.path}:{line}"
            where += ": "
        super().__init__(where + message)


@dataclass(frozen=True)
class ColumnMap:
    """Zero-based column layout of the master, coordinates and data files."""

    coord_cols: Mapping[str, int] = field(default_factory=lambda: {"x": 0, "y": 1})
    value_cols: Sequence[int] = (0,)
    step_value_col: int = 0
    step_file_col: int = 1

    def __post_init__(self):
        coord = dict(self.coord_cols)
        unknown = set(coord) - set(DOFS)
        if unknown:
            raise ValueError(f"unknown dof(s) {sorted(unknown)}; expected x, y, z")
        if "x" not in coord or "y" not in coord:
            raise ValueError("coordinate map needs at least x and y")
        if len(set(coord.values())) != len(coord):
            raise ValueError(f"duplicate coordinate column in {coord}")
        values = tuple(int(c) for c in self.value_cols)
        if not values:
            raise ValueError("at least one value column is required")
        if len(set(values)) != len(values):
            raise ValueError(f"duplicate value column in {list(values)}")
        if self.step_value_col == self.step_file_col:
            raise ValueError("stepValues and stepFiles must use different columns")
        for c in (*coord.values(), *values, self.step_value_col, self.step_file_col):
            if c < 0:
                raise ValueError(f"negative column index {c}")
        object.__setattr__(self, "coord_cols", {d: int(coord[d]) for d in DOFS if d in coord})
        object.__setattr__(self, "value_cols", values)

    @property
    def dim(self) -> int:
        return 3 if "z" in self.coord_cols else 2


@dataclass(frozen=True)
class ManifestEntry:
    time: float
    data_path: Path


@dataclass(frozen=True)
class TimeSeriesManifest:
    entries: tuple[ManifestEntry, ...]
    coordinates_path: Path | None = None

    def __post_init__(self):
        if not self.entries:
            raise ScatteredDataError("empty manifest")
        for a, b in zip(self.entries, self.entries[1:]):
            if not b.time > a.time:
                raise ScatteredDataError(f"non-increasing time {b.time!r} after {a.time!r}")

    @property
    def times(self) -> np.ndarray:
        return np.array([e.time for e in self.entries], dtype=float)

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True, eq=False)
class PointCloud:
    """``N x 3`` coordinates; ``z`` is identically zero when ``dim == 2``."""

    coords: np.ndarray
    dim: int = 3

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        c = np.array(self.coords, dtype=float)
        if c.ndim != 2 or c.shape[1] not in (2, 3):
            raise ValueError(f"coordinates must be N x 2 or N x 3, got shape {c.shape}")
        if c.shape[1] == 2:
            c = np.column_stack([c, np.zeros(len(c))])
        if self.dim == 2 and np.any(c[:, 2] != 0.0):
            raise ValueError("2D point cloud with nonzero z")
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite coordinate")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @classmethod
    def from_xy(cls, xy) -> "PointCloud":
        xy = np.asarray(xy, dtype=float)
        return cls(xy, dim=xy.shape[1])

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def xyz(self) -> np.ndarray:
        """Coordinates restricted to the active dimensions."""
        return self.coords[:, : self.dim]

    def __len__(self) -> int:
        return self.n

    def bbox_diagonal(self) -> float:
        if self.n == 0:
            return 0.0
        span = self.xyz.max(axis=0) - self.xyz.min(axis=0)
        return float(np.sqrt(np.dot(span, span)))


@dataclass(frozen=True, eq=False)
class FieldSnapshot:
    time: float
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[1] < 1:
            raise ValueError(f"values must be N x C with C >= 1, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite field value")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "time", float(self.time))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def components(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True, eq=False)
class ScatteredDataset:
    points: PointCloud
    manifest: TimeSeriesManifest
    snapshots: tuple[FieldSnapshot, ...]
    quantity_id: str = "value"

    def __post_init__(self):
        if len(self.snapshots) != len(self.manifest):
            raise ScatteredDataError(
                f"{len(self.snapshots)} snapshots for {len(self.manifest)} manifest entries"
            )
        for entry, snap in zip(self.manifest.entries, self.snapshots):
            if snap.time != entry.time:
                raise ScatteredDataError(
                    f"snapshot time {snap.time!r} differs from manifest time {entry.time!r}",
                    entry.data_path,
                )
            if snap.n != self.points.n:
                raise ScatteredDataError(
                    f"point count mismatch ({snap.n} vs {self.points.n})", entry.data_path
                )

    @property
    def times(self) -> np.ndarray:
        return self.manifest.times


def _records(path) -> Iterator[tuple[int, list[str]]]:
    """Yield ``(line number, trimmed fields)`` for every non-comment, non-blank line."""
    try:
        fh = open(path, "r", encoding="utf-8")
    except FileNotFoundError:
        raise ScatteredDataError("file not found", path) from None
    except OSError as exc:
        raise ScatteredDataError(f"cannot read file ({exc.strerror})", path) from None
    with fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            yield lineno, [f.strip() for f in line.split(",")]


def _field(fields: list[str], col: int, what: str, path, lineno: int) -> str:
    if col >= len(fields):
        raise ScatteredDataError(
            f"missing column {col} for {what} (line has {len(fields)} fields)", path, lineno
        )
    return fields[col]


def _finite(text: str, what: str, path, lineno: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ScatteredDataError(f"unparseable {what} {text!r}", path, lineno) from None
    if not math.isfinite(value):
        raise ScatteredDataError(f"non-finite {what} {text!r}", path, lineno)
    return value


def parse_master_file(path, colmap: ColumnMap | None = None) -> TimeSeriesManifest:
    """Parse a master file into an ordered manifest.

    Data paths are resolved relative to the master file's directory. A
    leading record with a single field is taken as the point-location file.
    """
    colmap = colmap or ColumnMap()
    path = Path(path)
    base = path.parent
    entries: list[ManifestEntry] = []
    coordinates_path = None
    for lineno, fields in _records(path):
        if not entries and coordinates_path is None and len(fields) == 1:
            coordinates_path = base / fields[0]
            continue
        text = _field(fields, colmap.step_value_col, "step value", path, lineno)
        try:
            time = float(text)
        except ValueError:
            raise ScatteredDataError(f"unparseable time {text!r}", path, lineno) from None
        if not math.isfinite(time):
            raise ScatteredDataError(f"non-finite time {text!r}", path, lineno)
        data = _field(fields, colmap.step_file_col, "step file", path, lineno)
        if not data:
            raise ScatteredDataError("empty data file path", path, lineno)
        if entries and not time > entries[-1].time:
            raise ScatteredDataError(f"non-increasing time at line {lineno}", path, lineno)
        entries.append(ManifestEntry(time, base / data))
    if not entries:
        raise ScatteredDataError("empty manifest", path)
    return TimeSeriesManifest(tuple(entries), coordinates_path)


def parse_coordinates_file(path, colmap: ColumnMap | None = None) -> PointCloud:
    colmap = colmap or ColumnMap()
    rows = []
    for lineno, fields in _records(path):
        row = [0.0, 0.0, 0.0]
        for axis, dof in enumerate(DOFS):
            col = colmap.coord_cols.get(dof)
            if col is None:
                continue
            text = _field(fields, col, f"coordinate {dof}", path, lineno)
            row[axis] = _finite(text, f"coordinate {dof}", path, lineno)
        rows.append(row)
    if not rows:
        raise ScatteredDataError("no points in coordinates file", path)
    return PointCloud(np.array(rows), dim=colmap.dim)


def parse_data_file(path, value_cols: Sequence[int], expected_n: int, time: float = 0.0) -> FieldSnapshot:
    """Read one time step. ``time`` is only attached, never read from the file."""
    value_cols = list(value_cols)
    rows = []
    for lineno, fields in _records(path):
        rows.append([_finite(_field(fields, c, "value", path, lineno), "value", path, lineno) for c in value_cols])
    if len(rows) != expected_n:
        raise ScatteredDataError(f"point count mismatch ({len(rows)} vs {expected_n})", path)
    values = np.array(rows, dtype=float).reshape(expected_n, len(value_cols))
    return FieldSnapshot(time, values)


def read_csvt(
    master_path,
    colmap: ColumnMap,
    quantity_id: str = "value",
    coordinates_path=None,
    workers: int = 1,
) -> ScatteredDataset:
    """Load the master file, the point cloud and every data file eagerly.

    ``coordinates_path`` overrides the point-location record of the master
    file. Data files are parsed on ``workers`` threads; order is kept.
    """
    manifest = parse_master_file(master_path, colmap)
    coords = coordinates_path if coordinates_path is not None else manifest.coordinates_path
    if coords is None:
        raise ScatteredDataError("no point-location file given in config or master file", master_path)
    points = parse_coordinates_file(coords, colmap)

    def read(entry: ManifestEntry) -> FieldSnapshot:
        return parse_data_file(entry.data_path, colmap.value_cols, points.n, entry.time)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            snapshots = tuple(pool.map(read, manifest.entries))
    else:
        snapshots = tuple(read(e) for e in manifest.entries)
    return ScatteredDataset(points, manifest, snapshots, quantity_id)


def format_float(x: float) -> str:
    """17 significant digits: enough for an exact binary64 round trip."""
    return format(float(x), ".17g")


def write_field_csv(points: PointCloud, snapshot: FieldSnapshot, path, quantity_id: str = "value") -> None:
    """Write ``x,y,z`` followed by one column per field component.

    Reading it back uses coordinate columns 0..2 and value columns 3...
    """
    if points.n == 0:
        raise ScatteredDataError("empty target set", path)
    if snapshot.n != points.n:
        raise ScatteredDataError(f"point count mismatch ({snapshot.n} vs {points.n})", path)
    header = ["x", "y", "z"] + [f"{quantity_id}_{c}" for c in range(snapshot.components)]
    lines = ["# " + ",".join(header)]
    for xyz, vals in zip(points.coords, snapshot.values):
        lines.append(",".join(format_float(v) for v in (*xyz, *vals)))
    _write_text(path, "\n".join(lines) + "\n")


def write_points_csv(points: PointCloud, path) -> None:
    if points.n == 0:
        raise ScatteredDataError("empty target set", path)
    lines = ["# x,y,z"] + [",".join(format_float(v) for v in xyz) for xyz in points.coords]
    _write_text(path, "\n".join(lines) + "\n")


def _write_text(path, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise ScatteredDataError(f"cannot write file ({exc.strerror})", path) from None
