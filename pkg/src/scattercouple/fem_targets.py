"""Gauss quadrature points of a small 2D mesh, used as interpolation targets.

Mesh file format::

    # comment
    $nodes
    1 0.0 0.0
    2 1.0 0.0
    ...
    $elements
    1 quad4 domain 1 2 3 4
    2 line2 bnd 1 2

Ids are 1-based in the file and 0-based in memory. Supported element kinds
are ``line2``, ``tri3`` and ``quad4`` with (bi)linear geometry.

Reference elements: ``[-1, 1]`` for lines, ``[-1, 1]^2`` for quads and the
unit triangle ``(0,0), (1,0), (0,1)`` for triangles.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .scattered_io import PointCloud, format_float

__all__ = [
    "ELEMENT_NODES",
    "MeshError",
    "Element",
    "Mesh",
    "TargetSet",
    "parse_mesh",
    "write_mesh",
    "rectangle_mesh",
    "gauss_points_reference",
    "map_to_physical",
    "quadrature_points",
    "write_targets_csv",
]

ELEMENT_NODES = {"line2": 2, "tri3": 3, "quad4": 4}
REFERENCE_MEASURE = {"line2": 2.0, "tri3": 0.5, "quad4": 4.0}


class MeshError(ValueError):
    pass


@dataclass(frozen=True)
class Element:
    kind: str
    nodes: tuple[int, ...]
    region: str = ""
    label: int | None = None  # id as written in the mesh file


@dataclass(frozen=True, eq=False)
class Mesh:
    nodes: PointCloud
    elements: tuple[Element, ...]

    def __post_init__(self):
        for eid, el in enumerate(self.elements):
            _check_element(self.nodes.xyz, el, eid)

    @property
    def regions(self) -> list[str]:
        return sorted({el.region for el in self.elements})

    def element_coords(self, eid: int) -> np.ndarray:
        return self.nodes.xyz[list(self.elements[eid].nodes)]


def _signed_area(xy: np.ndarray) -> float:
    x, y = xy[:, 0], xy[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _check_element(xyz: np.ndarray, el: Element, eid: int) -> None:
    name = el.label if el.label is not None else eid
    if el.kind not in ELEMENT_NODES:
        raise MeshError(f"element {name}: unknown element kind {el.kind!r}")
    if len(el.nodes) != ELEMENT_NODES[el.kind]:
        raise MeshError(f"element {name}: {el.kind} needs {ELEMENT_NODES[el.kind]} nodes, got {len(el.nodes)}")
    for n in el.nodes:
        if not 0 <= n < len(xyz):
            raise MeshError(f"element {name}: node id {n + 1} out of range 1..{len(xyz)}")
    if len(set(el.nodes)) != len(el.nodes):
        raise MeshError(f"element {name}: degenerate element (repeated node)")
    pts = xyz[list(el.nodes)]
    if el.kind == "line2":
        size = float(np.linalg.norm(pts[1] - pts[0]))
    else:
        if xyz.shape[1] != 2:
            raise MeshError(f"element {name}: {el.kind} requires 2D node coordinates")
        size = abs(_signed_area(pts))
    if size == 0.0:
        raise MeshError(f"element {name}: degenerate element (zero {'length' if el.kind == 'line2' else 'area'})")


def parse_mesh(path) -> Mesh:
    section = None
    node_ids: dict[int, int] = {}
    coords: list[tuple[float, float]] = []
    raw_elements: list[tuple[int, int, str, str, list[int]]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("$"):
                section = line[1:].lower()
                if section not in ("nodes", "elements"):
                    raise MeshError(f"{path}:{lineno}: unknown section {line!r}")
                continue
            parts = line.split()
            try:
                if section == "nodes":
                    if len(parts) != 3:
                        raise MeshError(f"{path}:{lineno}: node line needs 'id x y'")
                    nid = int(parts[0])
                    if nid in node_ids:
                        raise MeshError(f"{path}:{lineno}: duplicate node id {nid}")
                    xy = (float(parts[1]), float(parts[2]))
                    if not all(math.isfinite(v) for v in xy):
                        raise MeshError(f"{path}:{lineno}: non-finite node coordinate")
                    node_ids[nid] = len(coords)
                    coords.append(xy)
                elif section == "elements":
                    if len(parts) < 4:
                        raise MeshError(f"{path}:{lineno}: element line needs 'id kind region n1 ...'")
                    raw_elements.append((lineno, int(parts[0]), parts[1], parts[2], [int(v) for v in parts[3:]]))
                else:
                    raise MeshError(f"{path}:{lineno}: data outside a $nodes/$elements section")
            except ValueError as exc:
                if isinstance(exc, MeshError):
                    raise
                raise MeshError(f"{path}:{lineno}: {exc}") from None
    if not coords:
        raise MeshError(f"{path}: no nodes")
    if not raw_elements:
        raise MeshError(f"{path}: no elements")

    # node ids must be 1..N so file ids map onto 0-based positions directly
    if sorted(node_ids) != list(range(1, len(coords) + 1)):
        raise MeshError(f"{path}: node ids must be 1..{len(coords)}")
    xy = np.array(coords)[[node_ids[nid] for nid in sorted(node_ids)]]
    elements = []
    seen = set()
    for lineno, label, kind, region, nodes in raw_elements:
        if label in seen:
            raise MeshError(f"{path}:{lineno}: duplicate element id {label}")
        seen.add(label)
        el = Element(kind, tuple(n - 1 for n in nodes), region, label)
        try:
            _check_element(xy, el, len(elements))
        except MeshError as exc:
            raise MeshError(f"{path}:{lineno}: {exc}") from None
        elements.append(el)
    return Mesh(PointCloud(xy, dim=2), tuple(elements))


def write_mesh(mesh: Mesh, path) -> None:
    lines = ["$nodes"]
    for i, (x, y) in enumerate(mesh.nodes.xyz[:, :2], start=1):
        lines.append(f"{i} {format_float(x)} {format_float(y)}")
    lines.append("$elements")
    for i, el in enumerate(mesh.elements, start=1):
        lines.append(" ".join([str(i), el.kind, el.region or "default", *(str(n + 1) for n in el.nodes)]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def rectangle_mesh(nx: int, ny: int, x0=0.0, x1=1.0, y0=0.0, y1=1.0, domain="domain", boundary="bnd") -> Mesh:
    """Structured quad4 mesh of a rectangle with counter-clockwise line2 boundary."""
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    nodes = PointCloud(np.column_stack([X.ravel(), Y.ravel()]), dim=2)

    def nid(i, j):
        return j * (nx + 1) + i

    elements = [
        Element("quad4", (nid(i, j), nid(i + 1, j), nid(i + 1, j + 1), nid(i, j + 1)), domain)
        for j in range(ny)
        for i in range(nx)
    ]
    ring = (
        [nid(i, 0) for i in range(nx)]
        + [nid(nx, j) for j in range(ny)]
        + [nid(i, ny) for i in range(nx, 0, -1)]
        + [nid(0, j) for j in range(ny, 0, -1)]
    )
    elements += [Element("line2", (a, b), boundary) for a, b in zip(ring, ring[1:] + ring[:1])]
    return Mesh(nodes, tuple(elements))


_GAUSS_1D = {
    1: ((0.0,), (2.0,)),
    2: ((-1.0 / math.sqrt(3.0), 1.0 / math.sqrt(3.0)), (1.0, 1.0)),
    3: ((-math.sqrt(0.6), 0.0, math.sqrt(0.6)), (5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0)),
}


def _triangle_rule(order: int) -> list[tuple[tuple[float, float], float]]:
    if order == 1:
        return [((1.0 / 3.0, 1.0 / 3.0), 0.5)]
    if order == 2:
        a, b = 1.0 / 6.0, 2.0 / 3.0
        return [((a, a), 1.0 / 6.0), ((b, a), 1.0 / 6.0), ((a, b), 1.0 / 6.0)]
    # Collapsed 2x2 product rule (Stroud): degree 3 with positive weights.
    # u: 2-point Gauss rule for the weight (1 - u) on [0, 1]; its nodes are the
    # roots of u^2 - 0.8 u + 0.1. v: 2-point Gauss-Legendre on [0, 1].
    r = math.sqrt(0.06)
    u = (0.4 - r, 0.4 + r)
    wu1 = (1.0 / 6.0 - 0.5 * u[1]) / (u[0] - u[1])
    wu = (wu1, 0.5 - wu1)
    h = 0.5 / math.sqrt(3.0)
    v = (0.5 - h, 0.5 + h)
    return [((ui, vj * (1.0 - ui)), wi * 0.5) for ui, wi in zip(u, wu) for vj in v]


def gauss_points_reference(kind: str, order: int) -> list[tuple[tuple[float, ...], float]]:
    """Reference-element Gauss rule as ``[(coords, weight), ...]``.

    ``order`` is points per direction for lines and quads, and the rule
    degree (1, 2 or 3) for triangles.
    """
    if order not in (1, 2, 3):
        raise ValueError(f"unsupported quadrature order {order}; expected 1, 2 or 3")
    if kind == "line2":
        xs, ws = _GAUSS_1D[order]
        return [((x,), w) for x, w in zip(xs, ws)]
    if kind == "quad4":
        xs, ws = _GAUSS_1D[order]
        return [((xs[i], xs[j]), ws[i] * ws[j]) for j in range(order) for i in range(order)]
    if kind == "tri3":
        return _triangle_rule(order)
    raise ValueError(f"unknown element kind {kind!r}")


def _shape(kind: str, ref: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """Shape function values and their reference derivatives (nodes x ref dims)."""
    if kind == "line2":
        (s,) = ref
        return np.array([0.5 * (1 - s), 0.5 * (1 + s)]), np.array([[-0.5], [0.5]])
    if kind == "tri3":
        s, t = ref
        return np.array([1 - s - t, s, t]), np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    if kind == "quad4":
        s, t = ref
        sa = np.array([-1.0, 1.0, 1.0, -1.0])
        ta = np.array([-1.0, -1.0, 1.0, 1.0])
        N = 0.25 * (1 + sa * s) * (1 + ta * t)
        dN = np.column_stack([0.25 * sa * (1 + ta * t), 0.25 * ta * (1 + sa * s)])
        return N, dN
    raise ValueError(f"unknown element kind {kind!r}")


def map_to_physical(mesh: Mesh, eid: int, ref: Sequence[float]) -> tuple[np.ndarray, float]:
    """Physical position of a reference point and the Jacobian measure there.

    For lines the measure is the half-length; for surfaces it is ``det J``,
    which must be positive (counter-clockwise node order).
    """
    el = mesh.elements[eid]
    ref = tuple(float(r) for r in np.atleast_1d(ref))
    expected = 1 if el.kind == "line2" else 2
    if len(ref) != expected:
        raise ValueError(f"{el.kind} reference point needs {expected} coordinate(s)")
    X = mesh.element_coords(eid)
    N, dN = _shape(el.kind, ref)
    x = N @ X
    J = X.T @ dN  # physical dims x reference dims
    if el.kind == "line2":
        det = float(np.linalg.norm(J[:, 0]))
    else:
        det = float(J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0])
    if not det > 0:
        raise MeshError(f"inverted element {el.label if el.label is not None else eid} (det J = {det})")
    return x, det


@dataclass(frozen=True, eq=False)
class TargetSet:
    """Quadrature points with their element, local index, physical weight and normal.

    ``normals`` rows are NaN for points that are not on a ``line2`` element.
    """

    points: PointCloud
    element_ids: np.ndarray
    local_index: np.ndarray
    weights: np.ndarray
    normals: np.ndarray

    def __len__(self) -> int:
        return self.points.n


def _line_normal(X: np.ndarray) -> np.ndarray:
    t = X[1] - X[0]
    n = np.array([t[1], -t[0]])  # tangent turned clockwise
    return n / np.linalg.norm(n)


def quadrature_points(mesh: Mesh, order: int = 2, region: str | Iterable[str] | None = None) -> TargetSet:
    if region is None:
        wanted = None
    elif isinstance(region, str):
        wanted = {region}
    else:
        wanted = set(region)
    pts, eids, local, weights, normals = [], [], [], [], []
    for eid, el in enumerate(mesh.elements):
        if wanted is not None and el.region not in wanted:
            continue
        normal = _line_normal(mesh.element_coords(eid)) if el.kind == "line2" else np.full(2, np.nan)
        for q, (ref, w) in enumerate(gauss_points_reference(el.kind, order)):
            x, det = map_to_physical(mesh, eid, ref)
            pts.append(x)
            eids.append(eid)
            local.append(q)
            weights.append(w * det)
            normals.append(normal)
    if not pts:
        raise MeshError(f"empty region {region!r}; mesh regions are {mesh.regions}")
    return TargetSet(
        PointCloud(np.array(pts), dim=2),
        np.array(eids, dtype=np.intp),
        np.array(local, dtype=np.intp),
        np.array(weights),
        np.array(normals),
    )


def write_targets_csv(targets: TargetSet, path) -> None:
    lines = ["# x,y,z,element,local,weight,nx,ny"]
    for xyz, e, q, w, n in zip(targets.points.coords, targets.element_ids, targets.local_index, targets.weights, targets.normals):
        fields = [format_float(v) for v in xyz] + [str(int(e) + 1), str(int(q)), format_float(w)]
        fields += ["" if math.isnan(v) else format_float(v) for v in n]
        lines.append(",".join(fields))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
