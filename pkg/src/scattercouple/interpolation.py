"""Shepard (inverse-distance) interpolation of snapshots at target points.

Weights are ``1 / d**p`` over the ``k`` nearest sources, normalised to sum
to one. A target within ``exact_hit_tol * bbox_diagonal`` of one or more
sources takes the plain average of those sources instead.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .scattered_io import FieldSnapshot, PointCloud, ScatteredDataset, TimeSeriesManifest
from .spatial_index import NeighborSet, SpatialIndex

__all__ = [
    "TIME_MODES",
    "InterpParams",
    "TimeSelection",
    "Stencil",
    "DegenerateCloudError",
    "shepard_weights",
    "interpolate_point",
    "compute_stencil",
    "evaluate_snapshot",
    "select_time_step",
    "evaluate_transient",
]

log = logging.getLogger(__name__)

TIME_MODES = ("nearest", "hold_previous", "linear")


class DegenerateCloudError(ValueError):
    pass


@dataclass(frozen=True)
class InterpParams:
    k: int = 4
    p: float = 2.0
    exact_hit_tol: float = 1e-12
    time_mode: str = "nearest"

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k}")
        if not self.p > 0:
            raise ValueError(f"p must be > 0, got {self.p}")
        if not self.exact_hit_tol >= 0:
            raise ValueError(f"exact_hit_tol must be >= 0, got {self.exact_hit_tol}")
        if self.time_mode not in TIME_MODES:
            raise ValueError(f"unknown time mode {self.time_mode!r}; expected one of {TIME_MODES}")
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "p", float(self.p))


@dataclass(frozen=True)
class TimeSelection:
    lower_step: int
    upper_step: int
    alpha: float = 0.0

    def __post_init__(self):
        if self.lower_step > self.upper_step:
            raise ValueError("lower_step > upper_step")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha {self.alpha} outside [0, 1]")
        if self.lower_step == self.upper_step and self.alpha != 0.0:
            raise ValueError("alpha must be 0 for a single step")


def _hit_threshold(distances: np.ndarray, exact_hit_tol: float, scale: float | None) -> float:
    if scale is None:
        return 0.0
    if scale == 0.0 and np.any(distances > 0):
        raise DegenerateCloudError(
            "source cloud has zero extent; relative exact-hit tolerance is undefined"
        )
    return exact_hit_tol * scale


def _weight_rows(dist: np.ndarray, p: float, threshold: float) -> np.ndarray:
    """Normalised weights for each row of an ``M x k`` distance matrix."""
    hits = dist <= threshold
    any_hit = hits.any(axis=1)
    dmin = dist.min(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        # scaled by the nearest distance so large p cannot overflow
        w = (dmin / dist) ** p
    w[any_hit] = hits[any_hit]
    return w / w.sum(axis=1, keepdims=True)


def shepard_weights(distances, p: float = 2.0, exact_hit_tol: float = 1e-12, scale: float | None = None) -> np.ndarray:
    """Normalised inverse-distance weights for one target.

    ``scale`` is the source cloud's bounding-box diagonal; without it only
    zero distances count as exact hits.
    """
    d = np.asarray(distances, dtype=float).ravel()
    if d.size == 0:
        raise ValueError("no distances")
    if np.any(d < 0) or not np.all(np.isfinite(d)):
        raise ValueError("distances must be finite and >= 0")
    if not p > 0:
        raise ValueError(f"p must be > 0, got {p}")
    threshold = _hit_threshold(d, exact_hit_tol, scale)
    return _weight_rows(d[None, :], float(p), threshold)[0]


def _combine(values: np.ndarray, idx: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Convex combination of ``values[idx]`` row-wise; ``M x C`` result.

    Written as an offset from the nearest neighbour so a constant field comes
    back bit-exact, then clipped to the neighbour range against round-off.
    """
    f = values[idx]  # M x k x C
    base = f[:, 0, :]
    out = base + np.einsum("mk,mkc->mc", w, f - base[:, None, :])
    return np.clip(out, f.min(axis=1), f.max(axis=1))


def interpolate_point(
    snapshot: FieldSnapshot, neighbors: NeighborSet, params: InterpParams = InterpParams(), scale: float | None = None
) -> np.ndarray:
    if len(neighbors) == 0:
        raise ValueError("empty neighbour set")
    idx = np.asarray(neighbors.indices)
    if idx.min() < 0 or idx.max() >= snapshot.n:
        raise IndexError("neighbour index outside snapshot")
    w = shepard_weights(neighbors.distances, params.p, params.exact_hit_tol, scale)
    return _combine(snapshot.values, idx[None, :], w[None, :])[0]


@dataclass(frozen=True, eq=False)
class Stencil:
    """Neighbour indices and weights for a fixed target set.

    Depends only on geometry, so one stencil serves every time step.
    """

    indices: np.ndarray
    weights: np.ndarray

    @property
    def n_targets(self) -> int:
        return self.indices.shape[0]

    def apply(self, values: np.ndarray) -> np.ndarray:
        return _combine(np.asarray(values, dtype=float), self.indices, self.weights)


def _targets_array(targets: PointCloud | np.ndarray, index: SpatialIndex) -> np.ndarray:
    if isinstance(targets, PointCloud):
        if targets.dim != index.dim:
            raise ValueError(f"{targets.dim}D targets against a {index.dim}D source cloud")
        return targets.xyz
    arr = np.asarray(targets, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != index.dim:
        raise ValueError(f"targets must be M x {index.dim}, got shape {arr.shape}")
    return arr


def compute_stencil(targets: PointCloud | np.ndarray, index: SpatialIndex, params: InterpParams = InterpParams(), workers: int = 1) -> Stencil:
    """Neighbour search plus weights for every target.

    Targets are split into contiguous chunks for ``workers`` threads; the
    result is independent of the chunking.
    """
    xyz = _targets_array(targets, index)
    if len(xyz) == 0:
        raise ValueError("empty target set")
    scale = index.points.bbox_diagonal()

    def run(chunk: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        idx, dist = index.knn_many(chunk, params.k)
        threshold = _hit_threshold(dist, params.exact_hit_tol, scale)
        return idx, _weight_rows(dist, params.p, threshold)

    if workers > 1 and len(xyz) > 1:
        chunks = np.array_split(xyz, min(workers, len(xyz)))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, chunks))
        idx = np.concatenate([a for a, _ in parts])
        w = np.concatenate([b for _, b in parts])
    else:
        idx, w = run(xyz)
    idx.setflags(write=False)
    w.setflags(write=False)
    return Stencil(idx, w)


def evaluate_snapshot(
    dataset: ScatteredDataset,
    step: int,
    targets: PointCloud | np.ndarray,
    index: SpatialIndex,
    params: InterpParams = InterpParams(),
    stencil: Stencil | None = None,
) -> FieldSnapshot:
    if not 0 <= step < len(dataset.snapshots):
        raise IndexError(f"step {step} outside 0..{len(dataset.snapshots) - 1}")
    if stencil is None:
        stencil = compute_stencil(targets, index, params)
    snap = dataset.snapshots[step]
    return FieldSnapshot(snap.time, stencil.apply(snap.values))


def select_time_step(manifest: TimeSeriesManifest | np.ndarray, t: float, params: InterpParams | str = InterpParams()) -> TimeSelection:
    times = manifest.times if isinstance(manifest, TimeSeriesManifest) else np.asarray(manifest, dtype=float)
    if times.size == 0:
        raise ValueError("empty manifest")
    mode = params if isinstance(params, str) else params.time_mode
    if mode not in TIME_MODES:
        raise ValueError(f"unknown time mode {mode!r}")
    t = float(t)
    last = len(times) - 1
    if t < times[0] or t > times[-1]:
        log.warning("time %r outside stored range [%r, %r]; clamping", t, float(times[0]), float(times[-1]))

    if mode == "nearest":
        # argmin returns the first minimum: ties go to the earlier step
        i = int(np.argmin(np.abs(times - t)))
        return TimeSelection(i, i)
    j = int(np.searchsorted(times, t, side="right"))
    if mode == "hold_previous":
        i = max(j - 1, 0)
        return TimeSelection(i, i)
    if j == 0:
        return TimeSelection(0, 0)
    lo = j - 1
    if lo == last or times[lo] == t:
        return TimeSelection(lo, lo)
    alpha = (t - times[lo]) / (times[j] - times[lo])
    return TimeSelection(lo, j, float(alpha))


def evaluate_transient(
    dataset: ScatteredDataset,
    t: float,
    targets: PointCloud | np.ndarray,
    index: SpatialIndex,
    params: InterpParams = InterpParams(),
    stencil: Stencil | None = None,
) -> FieldSnapshot:
    sel = select_time_step(dataset.manifest, t, params)
    if stencil is None:
        stencil = compute_stencil(targets, index, params)
    lower = stencil.apply(dataset.snapshots[sel.lower_step].values)
    if sel.upper_step == sel.lower_step:
        return FieldSnapshot(t, lower)
    upper = stencil.apply(dataset.snapshots[sel.upper_step].values)
    return FieldSnapshot(t, (1.0 - sel.alpha) * lower + sel.alpha * upper)
