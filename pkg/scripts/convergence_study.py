"""IDW error at Gauss points of a quad mesh versus number of scattered samples.

    python scripts/convergence_study.py --sizes 500 2000 8000 --seeds 5
"""
import argparse
import time

import numpy as np

from scattercouple.fem_targets import quadrature_points, rectangle_mesh
from scattercouple.interpolation import InterpParams, compute_stencil
from scattercouple.scattered_io import PointCloud
from scattercouple.spatial_index import build_index


def field(xy):
    return np.sin(np.pi * xy[:, 0]) * np.cos(np.pi * xy[:, 1])


def rms_error(n, seed, targets, params):
    rng = np.random.default_rng(seed)
    src = rng.random((n, 2))
    stencil = compute_stencil(targets, build_index(PointCloud.from_xy(src)), params)
    approx = stencil.apply(field(src)[:, None])[:, 0]
    return float(np.sqrt(np.mean((approx - field(targets.xyz)) ** 2)))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[500, 2000, 8000])
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--mesh", type=int, default=10, help="elements per side")
    ap.add_argument("--order", type=int, default=2)
    ap.add_argument("--k", type=int, default=4)
    ap.add_argument("--p", type=float, default=2.0)
    args = ap.parse_args()

    targets = quadrature_points(rectangle_mesh(args.mesh, args.mesh), args.order, "domain").points
    params = InterpParams(k=args.k, p=args.p)
    print(f"{targets.n} targets, k={args.k}, p={args.p}")
    print(f"{'N':>8} {'median RMS':>12} {'min':>10} {'max':>10} {'time [s]':>9}")
    for n in args.sizes:
        t0 = time.perf_counter()
        errs = [rms_error(n, s, targets, params) for s in range(args.seeds)]
        print(f"{n:>8} {np.median(errs):>12.4e} {min(errs):>10.3e} {max(errs):>10.3e} {time.perf_counter() - t0:>9.2f}")


if __name__ == "__main__":
    main()
