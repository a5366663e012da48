from pathlib import Path

import numpy as np
import pytest

from scattercouple.fem_targets import rectangle_mesh, write_mesh

# The openCFS "Abc2dcsvt" reader block, kept as close to the original as
# possible (commented-out z/extra components included).
ABC2DCSVT_CONFIG = """\
<coupling>
  <scatteredData>
    <csvt fileName="./csvt/data.descrip" id="myCSVT">
      <stepValues col="0"/>
      <stepFiles col="1"/>
      <coordinates>
        <comp dof="x" col="0"/>
        <comp dof="y" col="1"/>
<!--          <comp dof="z" col="2"/>-->
      </coordinates>
      <quantity name="scatter" id="acouPot" knnLib="Flann">
        <comp col="0"/>
        <!--          <comp dof="y" col="1"/>-->
        <!--          <comp dof="z" col="2"/>-->
      </quantity>
    </csvt>
  </scatteredData>
  <run quantityId="acouPot" k="4" p="2" timeMode="nearest" times="all-steps">
    <targets mesh="square.msh" region="bnd" order="2"/>
  </run>
  <output dir="out"/>
</coupling>
"""

UNIT_SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def fmt(v):
    return format(float(v), ".17g")


def write_csvt(root: Path, points, steps, master_name="data.descrip", coords_name="points.csv"):
    """Write a csvt hierarchy. ``steps`` is a list of ``(time, N x C values)``."""
    root.mkdir(parents=True, exist_ok=True)
    points = np.asarray(points, dtype=float)
    (root / coords_name).write_text("\n".join(",".join(fmt(v) for v in row) for row in points) + "\n")
    lines = [coords_name]
    for i, (t, values) in enumerate(steps):
        name = f"step{i}.csv"
        values = np.asarray(values, dtype=float).reshape(len(values), -1)
        (root / name).write_text("\n".join(",".join(fmt(v) for v in row) for row in values) + "\n")
        lines.append(f"{fmt(t)},{name}")
    (root / master_name).write_text("\n".join(lines) + "\n")
    return root / master_name


@pytest.fixture
def abc2dcsvt(tmp_path):
    """2-step, 4-point scalar dataset, unit-square mesh and the transliterated config."""

    def make(step_values=None, root=None):
        root = root or tmp_path
        if step_values is None:
            step_values = [UNIT_SQUARE[:, 0], UNIT_SQUARE[:, 0] + UNIT_SQUARE[:, 1]]
        write_csvt(root / "csvt", UNIT_SQUARE, list(zip([0.0, 0.001], step_values)))
        write_mesh(rectangle_mesh(1, 1), root / "square.msh")
        cfg = root / "fixture.xml"
        cfg.write_text(ABC2DCSVT_CONFIG)
        return cfg

    return make


def pytest_terminal_summary(terminalreporter):
    try:
        import test_acceptance
    except ImportError:
        return
    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
