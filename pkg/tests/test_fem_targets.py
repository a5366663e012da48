import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scattercouple.fem_targets import (
    Element,
    Mesh,
    MeshError,
    gauss_points_reference,
    map_to_physical,
    parse_mesh,
    quadrature_points,
    rectangle_mesh,
    write_mesh,
    write_targets_csv,
)
from scattercouple.scattered_io import PointCloud

UNIT_SQUARE_MESH = """\
# unit square
$nodes
1 0 0
2 1 0
3 1 1
4 0 1
$elements
1 quad4 domain 1 2 3 4
2 line2 bnd 1 2
"""


def line_integral(m):
    return 2.0 / (m + 1) if m % 2 == 0 else 0.0


def triangle_integral(a, b):
    # integral of x^a y^b over the unit right triangle
    return math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)


def mesh_of(kind, xy, region="r"):
    xy = np.asarray(xy, dtype=float)
    return Mesh(PointCloud.from_xy(xy), (Element(kind, tuple(range(len(xy))), region),))


@pytest.mark.parametrize("n", [1, 2, 3])
def test_line_rule_matches_numpy_leggauss(n):
    x_ref, w_ref = np.polynomial.legendre.leggauss(n)
    rule = gauss_points_reference("line2", n)
    np.testing.assert_allclose([p[0] for p, _ in rule], x_ref, atol=1e-15)
    np.testing.assert_allclose([w for _, w in rule], w_ref, atol=1e-15)


def test_line_rule_values():
    assert gauss_points_reference("line2", 1) == [((0.0,), 2.0)]
    rule = gauss_points_reference("line2", 2)
    assert [p[0] for p, _ in rule] == pytest.approx([-0.5773502691896258, 0.5773502691896258], abs=1e-16)
    assert [w for _, w in rule] == [1.0, 1.0]


def test_triangle_centroid_rule():
    [(pt, w)] = gauss_points_reference("tri3", 1)
    assert pt == pytest.approx((1 / 3, 1 / 3), abs=1e-16) and w == 0.5


@pytest.mark.parametrize("n", [1, 2, 3])
def test_line_and_quad_exactness(n):
    deg = 2 * n - 1
    line = gauss_points_reference("line2", n)
    for m in range(deg + 1):
        assert abs(sum(w * p[0] ** m for p, w in line) - line_integral(m)) <= 1e-12
    quad = gauss_points_reference("quad4", n)
    for a in range(deg + 1):
        for b in range(deg + 1):
            got = sum(w * p[0] ** a * p[1] ** b for p, w in quad)
            assert abs(got - line_integral(a) * line_integral(b)) <= 1e-12


@pytest.mark.parametrize("order", [1, 2, 3])
def test_triangle_exactness(order):
    rule = gauss_points_reference("tri3", order)
    assert all(w > 0 for _, w in rule)
    for a in range(order + 1):
        for b in range(order + 1 - a):
            got = sum(w * p[0] ** a * p[1] ** b for p, w in rule)
            assert abs(got - triangle_integral(a, b)) <= 1e-12
    # points lie inside the reference triangle
    assert all(p[0] > 0 and p[1] > 0 and p[0] + p[1] < 1 for p, _ in rule)


def test_triangle_order3_not_exact_beyond_degree():
    rule = gauss_points_reference("tri3", 3)
    errs = [abs(sum(w * p[0] ** a * p[1] ** (4 - a) for p, w in rule) - triangle_integral(a, 4 - a)) for a in range(5)]
    assert max(errs) > 1e-6


@pytest.mark.parametrize("kind, measure", [("line2", 2.0), ("quad4", 4.0), ("tri3", 0.5)])
@pytest.mark.parametrize("order", [1, 2, 3])
def test_weight_sums(kind, measure, order):
    assert abs(sum(w for _, w in gauss_points_reference(kind, order)) - measure) <= 1e-12


def test_unsupported_order():
    with pytest.raises(ValueError):
        gauss_points_reference("quad4", 4)
    with pytest.raises(ValueError):
        gauss_points_reference("hex8", 1)


def test_map_examples():
    sq = mesh_of("quad4", [[0, 0], [1, 0], [1, 1], [0, 1]])
    x, j = map_to_physical(sq, 0, (0.0, 0.0))
    assert x.tolist() == [0.5, 0.5] and j == 0.25
    ln = mesh_of("line2", [[0, 0], [2, 0]])
    x, j = map_to_physical(ln, 0, (0.0,))
    assert x.tolist() == [1.0, 0.0] and j == 1.0
    tri = mesh_of("tri3", [[0, 0], [1, 0], [0, 1]])
    x, j = map_to_physical(tri, 0, (1 / 3, 1 / 3))
    assert x == pytest.approx([1 / 3, 1 / 3]) and j == 1.0


def test_map_inverted_element():
    cw = mesh_of("tri3", [[0, 0], [0, 1], [1, 0]])
    with pytest.raises(MeshError, match="inverted element"):
        map_to_physical(cw, 0, (0.2, 0.2))


def test_parse_mesh(tmp_path):
    f = tmp_path / "m.msh"
    f.write_text(UNIT_SQUARE_MESH)
    mesh = parse_mesh(f)
    assert mesh.nodes.n == 4 and len(mesh.elements) == 2
    assert mesh.elements[0].nodes == (0, 1, 2, 3)
    assert mesh.regions == ["bnd", "domain"]


@pytest.mark.parametrize(
    "elements, match",
    [
        ("1 quad4 d 1 2 3 99", "node id 99"),
        ("1 quad4 d 1 2 2 4", "degenerate element"),
        ("1 hex8 d 1 2 3 4", "unknown element kind"),
        ("1 line2 d 1 2 3", "needs 2 nodes"),
        ("1 tri3 d 1 2 x", "invalid literal"),
    ],
)
def test_parse_mesh_errors(tmp_path, elements, match):
    f = tmp_path / "m.msh"
    f.write_text("$nodes\n1 0 0\n2 1 0\n3 1 1\n4 0 1\n$elements\n" + elements + "\n")
    with pytest.raises(MeshError, match=match):
        parse_mesh(f)


def test_zero_area_quad(tmp_path):
    f = tmp_path / "m.msh"
    f.write_text("$nodes\n1 0 0\n2 1 0\n3 2 0\n4 3 0\n$elements\n1 quad4 d 1 2 3 4\n")
    with pytest.raises(MeshError, match="degenerate"):
        parse_mesh(f)


def test_mesh_write_round_trip(tmp_path):
    mesh = rectangle_mesh(3, 2)
    write_mesh(mesh, tmp_path / "r.msh")
    back = parse_mesh(tmp_path / "r.msh")
    np.testing.assert_array_equal(back.nodes.coords, mesh.nodes.coords)
    assert [(e.kind, e.nodes, e.region) for e in back.elements] == [(e.kind, e.nodes, e.region) for e in mesh.elements]


def test_quadrature_unit_square():
    ts = quadrature_points(mesh_of("quad4", [[0, 0], [1, 0], [1, 1], [0, 1]]), 2)
    assert len(ts) == 4
    np.testing.assert_array_equal(ts.weights, 0.25)
    assert ts.weights.sum() == 1.0
    assert np.all(np.isnan(ts.normals))
    assert ts.local_index.tolist() == [0, 1, 2, 3]


def test_quadrature_line_normal():
    ts = quadrature_points(mesh_of("line2", [[0, 0], [1, 0]], region="bnd"), 2, "bnd")
    assert len(ts) == 2
    np.testing.assert_array_equal(ts.normals, [[0.0, -1.0], [0.0, -1.0]])
    assert ts.weights.sum() == pytest.approx(1.0, abs=1e-15)


def test_quadrature_empty_region():
    with pytest.raises(MeshError, match="empty region"):
        quadrature_points(rectangle_mesh(1, 1), 2, "nothing")


def test_rectangle_boundary_normals_point_outward():
    mesh = rectangle_mesh(4, 3, 0, 2, 0, 1)
    ts = quadrature_points(mesh, 1, "bnd")
    centre = np.array([1.0, 0.5])
    outward = np.einsum("ij,ij->i", ts.points.xyz - centre, ts.normals)
    assert np.all(outward > 0)
    assert ts.weights.sum() == pytest.approx(6.0, abs=1e-12)


def test_targets_csv(tmp_path):
    ts = quadrature_points(rectangle_mesh(1, 1), 2)
    write_targets_csv(ts, tmp_path / "q.csv")
    lines = (tmp_path / "q.csv").read_text().splitlines()
    assert lines[0] == "# x,y,z,element,local,weight,nx,ny"
    assert len(lines) == 1 + len(ts)


coord = st.floats(-10, 10, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(x0=coord, y0=coord, ax=coord, ay=coord, bx=coord, by=coord, order=st.sampled_from([1, 2, 3]))
def test_weight_sum_equals_measure(x0, y0, ax, ay, bx, by, order):
    cross = ax * by - ay * bx
    if abs(cross) < 1e-3:
        return
    if cross < 0:
        ax, ay, bx, by = bx, by, ax, ay
        cross = -cross
    p0 = np.array([x0, y0])
    a, b = np.array([ax, ay]), np.array([bx, by])
    tri = mesh_of("tri3", [p0, p0 + a, p0 + b])
    quad = mesh_of("quad4", [p0, p0 + a, p0 + a + b, p0 + b])
    line = mesh_of("line2", [p0, p0 + a])
    scale = max(1.0, cross)
    assert abs(quadrature_points(tri, order).weights.sum() - cross / 2) <= 1e-12 * scale
    assert abs(quadrature_points(quad, order).weights.sum() - cross) <= 1e-12 * scale
    length = math.hypot(ax, ay)
    if length > 1e-6:
        assert abs(quadrature_points(line, order).weights.sum() - length) <= 1e-12 * max(1.0, length)


@settings(max_examples=200, deadline=None)
@given(x0=coord, y0=coord, x1=coord, y1=coord)
def test_line_normal_properties(x0, y0, x1, y1):
    if math.hypot(x1 - x0, y1 - y0) < 1e-6:
        return
    fwd = quadrature_points(mesh_of("line2", [[x0, y0], [x1, y1]]), 1).normals[0]
    rev = quadrature_points(mesh_of("line2", [[x1, y1], [x0, y0]]), 1).normals[0]
    tangent = np.array([x1 - x0, y1 - y0])
    assert abs(np.linalg.norm(fwd) - 1.0) <= 1e-12
    assert abs(np.dot(fwd, tangent)) <= 1e-12 * np.linalg.norm(tangent)
    np.testing.assert_allclose(rev, -fwd, atol=1e-15)
