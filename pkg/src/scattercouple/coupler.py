"""End-to-end driver: validate, load, build targets, interpolate, write."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

from .config import ConfigError, CouplingConfig
from .fem_targets import MeshError, TargetSet, parse_mesh, quadrature_points
from .interpolation import compute_stencil, evaluate_transient
from .scattered_io import (
    ColumnMap,
    PointCloud,
    ScatteredDataError,
    ScatteredDataset,
    format_float,
    parse_coordinates_file,
    parse_data_file,
    parse_master_file,
    read_csvt,
    write_field_csv,
    write_points_csv,
)
from .spatial_index import build_index

__all__ = [
    "Finding",
    "ValidationReport",
    "CouplingError",
    "OutputManifest",
    "load_dataset",
    "load_targets",
    "validate_dataset",
    "run_couple",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Finding:
    severity: str  # "error" | "warning"
    message: str
    location: str = ""

    def __str__(self) -> str:
        where = f" [{self.location}]" if self.location else ""
        return f"{self.severity}: {self.message}{where}"


@dataclass
class ValidationReport:
    findings: list[Finding] = field(default_factory=list)

    def error(self, message: str, location="") -> None:
        self.findings.append(Finding("error", message, str(location)))

    def warning(self, message: str, location="") -> None:
        self.findings.append(Finding("warning", message, str(location)))

    @property
    def errors(self) -> list[Finding]:
        return [f for f in self.findings if f.severity == "error"]

    @property
    def warnings(self) -> list[Finding]:
        return [f for f in self.findings if f.severity == "warning"]

    @property
    def ok(self) -> bool:
        return not self.errors

    def __len__(self) -> int:
        return len(self.findings)

    def __str__(self) -> str:
        return "\n".join(str(f) for f in self.findings)


class CouplingError(RuntimeError):
    def __init__(self, message: str, report: ValidationReport | None = None):
        super().__init__(message)
        self.report = report


def load_dataset(config: CouplingConfig, workers: int = 1) -> ScatteredDataset:
    return read_csvt(
        config.dataset.file_name,
        config.column_map,
        quantity_id=config.quantity.id,
        coordinates_path=config.dataset.coordinates_file,
        workers=workers,
    )


def _from_error(report: ValidationReport, exc: ScatteredDataError) -> None:
    loc = exc.path or ""
    if exc.line is not None:
        loc = f"{loc}:{exc.line}"
    report.error(exc.reason, loc)


def validate_dataset(config: CouplingConfig, check_targets: bool = True) -> ValidationReport:
    """Check every file the run would touch and collect all findings."""
    report = ValidationReport()
    try:
        colmap = config.column_map
    except (ConfigError, ValueError) as exc:
        report.error(str(exc), config.source or "")
        return report

    try:
        manifest = parse_master_file(config.dataset.file_name, colmap)
    except ScatteredDataError as exc:
        _from_error(report, exc)
        manifest = None

    coords_path = config.dataset.coordinates_file
    if coords_path is None and manifest is not None:
        coords_path = manifest.coordinates_path
    points = None
    if coords_path is None:
        if manifest is not None:
            report.error("no point-location file given in config or master file", config.dataset.file_name)
    else:
        try:
            points = parse_coordinates_file(coords_path, colmap)
        except ScatteredDataError as exc:
            _from_error(report, exc)

    if manifest is not None:
        for entry in manifest.entries:
            if not entry.data_path.is_file():
                report.error("data file not found", entry.data_path)
                continue
            if points is None:
                continue
            try:
                parse_data_file(entry.data_path, colmap.value_cols, points.n, entry.time)
            except ScatteredDataError as exc:
                _from_error(report, exc)
        times = manifest.times.tolist()
        query = config.run.times or ()
        if any(not b > a for a, b in zip(query, query[1:])):
            report.error("requested times must be strictly increasing", config.source or "")
        for t in query:
            if t < times[0] or t > times[-1]:
                report.warning(
                    f"query time {t!r} outside stored range [{times[0]!r}, {times[-1]!r}]; will clamp",
                    config.source or "",
                )

    if check_targets:
        tgt = config.run.targets
        if tgt.mesh is not None:
            try:
                mesh = parse_mesh(tgt.mesh)
                quadrature_points(mesh, tgt.order, tgt.region)
            except FileNotFoundError:
                report.error("mesh file not found", tgt.mesh)
            except (MeshError, ValueError) as exc:
                report.error(str(exc), tgt.mesh)
        elif tgt.points_file is not None:
            try:
                load_targets(config, dim=points.dim if points is not None else None)
            except ScatteredDataError as exc:
                _from_error(report, exc)
        else:
            report.error("no interpolation targets (mesh or points file)", config.source or "")
    return report


def load_targets(config: CouplingConfig, dim: int | None = None) -> PointCloud | TargetSet:
    """Quadrature points of the configured mesh, or points read from a file.

    A points file holds ``x,y`` or ``x,y,z`` in its first columns.
    """
    tgt = config.run.targets
    if tgt.mesh is not None:
        return quadrature_points(parse_mesh(tgt.mesh), tgt.order, tgt.region)
    if tgt.points_file is not None:
        cols = {"x": 0, "y": 1, "z": 2} if dim == 3 else {"x": 0, "y": 1}
        return parse_coordinates_file(tgt.points_file, ColumnMap(coord_cols=cols))
    raise CouplingError("no interpolation targets configured")


@dataclass(frozen=True)
class OutputManifest:
    master_path: Path
    points_path: Path
    step_files: tuple[Path, ...]
    times: tuple[float, ...]
    column_map: ColumnMap
    quantity_id: str

    def load(self) -> ScatteredDataset:
        return read_csvt(self.master_path, self.column_map, self.quantity_id)


def run_couple(config: CouplingConfig, workers: int = 1) -> OutputManifest:
    """Interpolate the configured quantity onto the targets for every requested time.

    Writes ``<id>_<seq>.csv`` per time, ``<id>_points.csv`` and, last,
    the master file ``<id>.descrip`` so the output is itself a csvt dataset.
    """
    report = validate_dataset(config)
    for f in report.warnings:
        log.warning("%s", f)
    if not report.ok:
        raise CouplingError("validation failed:\n" + str(report), report)
    if config.output is None:
        raise CouplingError("no output directory configured")

    dataset = load_dataset(config, workers=workers)
    index = build_index(dataset.points, config.backend)
    targets = load_targets(config, dim=dataset.points.dim)
    target_points = targets.points if isinstance(targets, TargetSet) else targets
    if target_points.dim != dataset.points.dim:
        # planar targets against a 3D cloud: lift into the z = 0 plane
        target_points = PointCloud(target_points.coords, dim=dataset.points.dim)
    params = config.run.params
    stencil = compute_stencil(target_points, index, params, workers=workers)
    log.info(
        "%d source points, %d targets, k=%d p=%g, backend %s",
        dataset.points.n, target_points.n, params.k, params.p, index.backend,
    )

    times = dataset.times.tolist() if config.run.times is None else list(config.run.times)
    out = Path(config.output)
    out.mkdir(parents=True, exist_ok=True)
    qid = config.quantity.id
    width = max(4, len(str(len(times) - 1)))
    step_files = []
    for seq, t in enumerate(times):
        name = f"{qid}_{seq:0{width}d}.csv"
        try:
            snap = evaluate_transient(dataset, t, target_points, index, params, stencil=stencil)
            write_field_csv(target_points, snap, out / name, qid)
        except (ScatteredDataError, ValueError, OSError) as exc:
            raise CouplingError(f"step {seq} (t={t!r}): {exc}") from exc
        log.info("step %d t=%r -> %s", seq, t, name)
        step_files.append(out / name)

    points_path = out / f"{qid}_points.csv"
    write_points_csv(target_points, points_path)
    master = out / f"{qid}.descrip"
    lines = [points_path.name] + [f"{format_float(t)},{p.name}" for t, p in zip(times, step_files)]
    master.write_text("\n".join(lines) + "\n", encoding="utf-8")

    dim = target_points.dim
    ncomp = len(config.quantity.value_cols)
    colmap = ColumnMap(
        coord_cols={"x": 0, "y": 1, "z": 2} if dim == 3 else {"x": 0, "y": 1},
        value_cols=tuple(range(3, 3 + ncomp)),
    )
    return OutputManifest(master, points_path, tuple(step_files), tuple(float(t) for t in times), colmap, qid)
