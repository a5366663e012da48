"""Write a small csvt dataset, a unit-square mesh and a config into a directory.

    python scripts/make_abc2dcsvt_demo.py demo/
    scattercouple couple --config demo/abc2dcsvt.xml
"""
import argparse
from pathlib import Path

import numpy as np

from scattercouple.fem_targets import rectangle_mesh, write_mesh
from scattercouple.scattered_io import format_float

CONFIG = """\
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
  <run quantityId="acouPot" k="4" p="2" timeMode="nearest" times="all-steps">
    <targets mesh="square.msh" region="bnd" order="2"/>
  </run>
  <output dir="out"/>
</coupling>
"""


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("directory", type=Path)
    ap.add_argument("--points", type=int, default=400)
    ap.add_argument("--steps", type=int, default=10)
    ap.add_argument("--dt", type=float, default=1e-3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    root = args.directory
    (root / "csvt").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    xy = rng.random((args.points, 2))
    lines = ["points.csv"]
    (root / "csvt" / "points.csv").write_text("".join(f"{format_float(x)},{format_float(y)}\n" for x, y in xy))
    for i in range(args.steps):
        t = i * args.dt
        # a travelling wave as a stand-in acoustic potential
        values = np.sin(2 * np.pi * (xy[:, 0] - 250.0 * t)) * np.cos(np.pi * xy[:, 1])
        name = f"step{i:04d}.csv"
        (root / "csvt" / name).write_text("".join(f"{format_float(v)}\n" for v in values))
        lines.append(f"{format_float(t)},{name}")
    (root / "csvt" / "data.descrip").write_text("\n".join(lines) + "\n")
    write_mesh(rectangle_mesh(8, 8), root / "square.msh")
    (root / "abc2dcsvt.xml").write_text(CONFIG)
    print(f"wrote {root / 'abc2dcsvt.xml'}")


if __name__ == "__main__":
    main()
