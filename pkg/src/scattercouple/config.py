"""XML coupling configuration.

The ``scatteredData`` block uses the same element and attribute names as an
openCFS simulation file, so a reader can be copied over verbatim::

    <coupling>
      <scatteredData>
        <csvt fileName="./csvt/data.descrip" id="myCSVT">
          <stepValues col="0"/>
          <stepFiles col="1"/>
          <coordinates>
            <comp dof="x" col="0"/>
            <comp dof="y" col="1"/>
          </coordinates>
          <quantity name="scatter" id="acouPot" knnLib="Flann">
            <comp col="0"/>
          </quantity>
        </csvt>
      </scatteredData>
      <run quantityId="acouPot" k="4" p="2" timeMode="nearest" times="all-steps" backend="kdtree">
        <targets mesh="square.msh" region="bnd" order="2"/>
      </run>
      <output dir="out"/>
    </coupling>

``coordinates`` may carry a ``fileName`` attribute; otherwise the point
location file is taken from the master file. ``run`` and ``output`` are
optional and can be supplied on the command line instead. Relative paths are
resolved against the directory of the config file.
"""
from __future__ import annotations

import dataclasses
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .interpolation import InterpParams
from .scattered_io import ColumnMap

__all__ = [
    "KNN_LIBS",
    "ConfigError",
    "QuantitySpec",
    "DatasetSpec",
    "TargetSpec",
    "RunSpec",
    "CouplingConfig",
    "parse_coupling_config",
    "parse_times",
    "coupling_config",
]

# Both library names select the exact kd-tree; the linear scan is a run option.
KNN_LIBS = {"flann": "kdtree", "cgal": "kdtree"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class QuantitySpec:
    id: str
    value_cols: tuple[int, ...]
    name: str = ""
    knn_lib: str = "Flann"


@dataclass(frozen=True)
class DatasetSpec:
    file_name: Path
    id: str
    coord_cols: dict
    quantities: tuple[QuantitySpec, ...]
    step_values_col: int = 0
    step_files_col: int = 1
    coordinates_file: Path | None = None

    def quantity(self, quantity_id: str | None = None) -> QuantitySpec:
        if quantity_id is None:
            if len(self.quantities) != 1:
                raise ConfigError(
                    f"{len(self.quantities)} quantities defined; select one with quantityId"
                )
            return self.quantities[0]
        for q in self.quantities:
            if q.id == quantity_id:
                return q
        raise ConfigError(f"unknown quantity id {quantity_id!r}")

    def column_map(self, quantity_id: str | None = None) -> ColumnMap:
        return ColumnMap(
            coord_cols=self.coord_cols,
            value_cols=self.quantity(quantity_id).value_cols,
            step_value_col=self.step_values_col,
            step_file_col=self.step_files_col,
        )


@dataclass(frozen=True)
class TargetSpec:
    mesh: Path | None = None
    region: str | None = None
    order: int = 2
    points_file: Path | None = None


@dataclass(frozen=True)
class RunSpec:
    params: InterpParams = field(default_factory=InterpParams)
    backend: str | None = None  # None: derived from knnLib
    times: tuple[float, ...] | None = None  # None: every stored step
    targets: TargetSpec = field(default_factory=TargetSpec)
    quantity_id: str | None = None


@dataclass(frozen=True)
class CouplingConfig:
    dataset: DatasetSpec
    run: RunSpec = field(default_factory=RunSpec)
    output: Path | None = None
    source: Path | None = None

    @property
    def quantity(self) -> QuantitySpec:
        return self.dataset.quantity(self.run.quantity_id)

    @property
    def column_map(self) -> ColumnMap:
        return self.dataset.column_map(self.quantity.id)

    @property
    def backend(self) -> str:
        if self.run.backend is not None:
            return self.run.backend
        return KNN_LIBS[self.quantity.knn_lib.lower()]

    def with_overrides(
        self,
        *,
        k=None,
        p=None,
        time_mode=None,
        times=None,
        backend=None,
        mesh=None,
        region=None,
        order=None,
        targets_file=None,
        output=None,
    ) -> "CouplingConfig":
        """Copy with every non-``None`` argument replacing the config value."""
        params = self.run.params
        changes = {n: v for n, v in (("k", k), ("p", p), ("time_mode", time_mode)) if v is not None}
        if changes:
            params = dataclasses.replace(params, **changes)
        tgt = self.run.targets
        if targets_file is not None:
            tgt = TargetSpec(points_file=Path(targets_file), order=tgt.order)
        if mesh is not None:
            tgt = dataclasses.replace(tgt, mesh=Path(mesh), points_file=None)
        if region is not None:
            tgt = dataclasses.replace(tgt, region=region)
        if order is not None:
            tgt = dataclasses.replace(tgt, order=int(order))
        run = dataclasses.replace(
            self.run,
            params=params,
            targets=tgt,
            times=self.run.times if times is None else parse_times(times),
            backend=self.run.backend if backend is None else _backend(backend),
        )
        return dataclasses.replace(self, run=run, output=self.output if output is None else Path(output))


def parse_times(value) -> tuple[float, ...] | None:
    """``"all-steps"`` gives ``None``; otherwise a comma list or sequence of floats."""
    if value is None:
        return None
    if isinstance(value, str):
        text = value.strip()
        if text.lower() in ("all-steps", "all"):
            return None
        try:
            out = tuple(float(v) for v in text.split(",") if v.strip())
        except ValueError:
            raise ConfigError(f"bad times list {value!r}") from None
    else:
        out = tuple(float(v) for v in value)
    if not out:
        raise ConfigError("empty times list")
    return out


def _backend(name: str) -> str:
    if name not in ("kdtree", "linear"):
        raise ConfigError(f"unknown backend {name!r}; expected kdtree or linear")
    return name


def _req(el: ET.Element, attr: str, where: str) -> str:
    value = el.get(attr)
    if value is None or not value.strip():
        raise ConfigError(f"missing required attribute {attr!r} on <{where}>")
    return value.strip()


def _int(el: ET.Element, attr: str, where: str) -> int:
    text = _req(el, attr, where)
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"<{where} {attr}=...>: expected an integer, got {text!r}") from None


def _child(el: ET.Element, tag: str, where: str) -> ET.Element:
    found = el.find(tag)
    if found is None:
        raise ConfigError(f"missing required element <{tag}> in <{where}>")
    return found


def _parse_csvt(csvt: ET.Element, base: Path) -> DatasetSpec:
    file_name = base / _req(csvt, "fileName", "csvt")
    reader_id = _req(csvt, "id", "csvt")
    step_values = _int(_child(csvt, "stepValues", "csvt"), "col", "stepValues")
    step_files = _int(_child(csvt, "stepFiles", "csvt"), "col", "stepFiles")

    coords_el = _child(csvt, "coordinates", "csvt")
    coord_cols: dict[str, int] = {}
    for comp in coords_el.findall("comp"):
        dof = _req(comp, "dof", "coordinates/comp").lower()
        if dof not in ("x", "y", "z"):
            raise ConfigError(f"unknown dof {dof!r} in <coordinates>")
        if dof in coord_cols:
            raise ConfigError(f"dof {dof!r} mapped twice in <coordinates>")
        coord_cols[dof] = _int(comp, "col", "coordinates/comp")
    coords_file = coords_el.get("fileName")

    quantities = []
    for q in csvt.findall("quantity"):
        qid = _req(q, "id", "quantity")
        lib = q.get("knnLib", "Flann").strip()
        if lib.lower() not in KNN_LIBS:
            raise ConfigError(f"unknown knnLib {lib!r} for quantity {qid!r}; expected Flann or Cgal")
        cols = tuple(_int(c, "col", "quantity/comp") for c in q.findall("comp"))
        if not cols:
            raise ConfigError(f"quantity {qid!r} has no <comp col=...> entries")
        if any(existing.id == qid for existing in quantities):
            raise ConfigError(f"duplicate quantity id {qid!r}")
        quantities.append(QuantitySpec(qid, cols, q.get("name", ""), lib))
    if not quantities:
        raise ConfigError("missing required element <quantity> in <csvt>")

    spec = DatasetSpec(
        file_name=file_name,
        id=reader_id,
        coord_cols=coord_cols,
        quantities=tuple(quantities),
        step_values_col=step_values,
        step_files_col=step_files,
        coordinates_file=None if coords_file is None else base / coords_file.strip(),
    )
    try:
        for q in quantities:
            spec.column_map(q.id)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return spec


def _parse_run(run: ET.Element | None, base: Path) -> RunSpec:
    if run is None:
        return RunSpec()
    try:
        params = InterpParams(
            k=int(run.get("k", 4)),
            p=float(run.get("p", 2.0)),
            exact_hit_tol=float(run.get("exactHitTol", 1e-12)),
            time_mode=run.get("timeMode", "nearest"),
        )
    except ValueError as exc:
        raise ConfigError(f"<run>: {exc}") from None
    backend = run.get("backend")
    targets = TargetSpec()
    tel = run.find("targets")
    if tel is not None:
        mesh, points = tel.get("mesh"), tel.get("pointsFile")
        if mesh and points:
            raise ConfigError("<targets> takes either mesh or pointsFile, not both")
        targets = TargetSpec(
            mesh=base / mesh if mesh else None,
            region=tel.get("region"),
            order=int(tel.get("order", 2)),
            points_file=base / points if points else None,
        )
    return RunSpec(
        params=params,
        backend=None if backend is None else _backend(backend),
        times=parse_times(run.get("times", "all-steps")),
        targets=targets,
        quantity_id=run.get("quantityId"),
    )


def parse_coupling_config(path) -> CouplingConfig:
    path = Path(path)
    try:
        root = ET.parse(path).getroot()
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except ET.ParseError as exc:
        raise ConfigError(f"{path}: malformed XML ({exc})") from None
    base = path.parent
    if root.tag == "scatteredData":
        readers = root.findall("csvt")
    else:
        readers = root.findall(".//scatteredData/csvt")
    if not readers:
        raise ConfigError(f"{path}: no <scatteredData><csvt> reader found")
    if len(readers) > 1:
        raise ConfigError(f"{path}: one <csvt> reader per config, found {len(readers)}")
    dataset = _parse_csvt(readers[0], base)
    run = _parse_run(root.find("run"), base)
    out_el = root.find("output")
    output = base / _req(out_el, "dir", "output") if out_el is not None else None
    config = CouplingConfig(dataset, run, output, path)
    _ = config.quantity  # unknown or ambiguous quantityId raises here
    return config


def coupling_config(
    master: str | Path,
    quantity_id: str = "value",
    value_cols: Sequence[int] = (0,),
    coord_cols: dict | None = None,
    **run_kwargs,
) -> CouplingConfig:
    """Build a config in code, without an XML file."""
    dataset = DatasetSpec(
        file_name=Path(master),
        id=quantity_id,
        coord_cols=coord_cols or {"x": 0, "y": 1},
        quantities=(QuantitySpec(quantity_id, tuple(value_cols)),),
    )
    output = run_kwargs.pop("output", None)
    return CouplingConfig(dataset, RunSpec(**run_kwargs), None if output is None else Path(output))
