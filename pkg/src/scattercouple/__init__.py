"""Offline coupling of scattered time-series field data onto FEM quadrature points."""
from .config import CouplingConfig, parse_coupling_config
from .coupler import ValidationReport, load_dataset, run_couple, validate_dataset
from .fem_targets import Mesh, TargetSet, gauss_points_reference, map_to_physical, parse_mesh, quadrature_points
from .interpolation import (
    InterpParams,
    TimeSelection,
    evaluate_snapshot,
    evaluate_transient,
    interpolate_point,
    select_time_step,
    shepard_weights,
)
from .scattered_io import (
    ColumnMap,
    FieldSnapshot,
    PointCloud,
    ScatteredDataError,
    ScatteredDataset,
    TimeSeriesManifest,
    parse_coordinates_file,
    parse_data_file,
    parse_master_file,
    write_field_csv,
)
from .spatial_index import NeighborSet, SpatialIndex, build_index, knn, radius_search

__version__ = "0.1.0"

__all__ = [
    "CouplingConfig",
    "parse_coupling_config",
    "ValidationReport",
    "load_dataset",
    "run_couple",
    "validate_dataset",
    "Mesh",
    "TargetSet",
    "gauss_points_reference",
    "map_to_physical",
    "parse_mesh",
    "quadrature_points",
    "InterpParams",
    "TimeSelection",
    "evaluate_snapshot",
    "evaluate_transient",
    "interpolate_point",
    "select_time_step",
    "shepard_weights",
    "ColumnMap",
    "FieldSnapshot",
    "PointCloud",
    "ScatteredDataError",
    "ScatteredDataset",
    "TimeSeriesManifest",
    "parse_coordinates_file",
    "parse_data_file",
    "parse_master_file",
    "write_field_csv",
    "NeighborSet",
    "SpatialIndex",
    "build_index",
    "knn",
    "radius_search",
]
