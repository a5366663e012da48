"""Exact Euclidean k-nearest-neighbour and fixed-radius search.

Two backends answer the same queries:

``kdtree``
    median split on the axis of widest spread, leaves of at most 16 points.
``linear``
    brute-force scan; slow, obviously correct, used as the test oracle.

Results are ordered by distance, ties by ascending source index, so both
backends agree element-wise.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .scattered_io import PointCloud

__all__ = ["NeighborSet", "SpatialIndex", "build_index", "knn", "radius_search", "BACKENDS"]

BACKENDS = ("kdtree", "linear")
LEAF_SIZE = 16


@dataclass(frozen=True, eq=False)
class NeighborSet:
    indices: np.ndarray
    distances: np.ndarray

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self) -> Iterator[tuple[int, float]]:
        return iter(self.pairs())

    def pairs(self) -> list[tuple[int, float]]:
        return [(int(i), float(d)) for i, d in zip(self.indices, self.distances)]


def _sq_dist(pts: np.ndarray, q: np.ndarray) -> np.ndarray:
    # explicit per-axis accumulation: both backends must produce identical bits
    d2 = (pts[:, 0] - q[0]) ** 2
    for axis in range(1, pts.shape[1]):
        d2 = d2 + (pts[:, axis] - q[axis]) ** 2
    return d2


def _ordered(idx: np.ndarray, d2: np.ndarray) -> NeighborSet:
    order = np.lexsort((idx, d2))
    return NeighborSet(idx[order].astype(np.intp), np.sqrt(d2[order]))


class SpatialIndex:
    """Immutable search structure over a point cloud.

    Tree layout is kept in flat arrays. Node ``i`` is a leaf when
    ``axis[i] == -1``; its points are ``perm[start[i]:stop[i]]``.
    """

    def __init__(self, points: PointCloud, backend: str = "kdtree", leaf_size: int = LEAF_SIZE):
        if backend not in BACKENDS:
            raise ValueError(f"unknown backend {backend!r}; expected one of {BACKENDS}")
        if points.n < 1:
            raise ValueError("cannot index an empty point cloud")
        if leaf_size < 1:
            raise ValueError("leaf_size must be >= 1")
        self.points = points
        self.backend = backend
        self.leaf_size = leaf_size
        self._xyz = np.ascontiguousarray(points.xyz)
        self._xyz.setflags(write=False)
        self._all = np.arange(points.n, dtype=np.intp)
        if backend == "kdtree":
            self._build_tree()

    @property
    def dim(self) -> int:
        return self.points.dim

    @property
    def n(self) -> int:
        return self.points.n

    def _build_tree(self) -> None:
        axis, split, left, right, start, stop = [], [], [], [], [], []
        perm = np.arange(self.n, dtype=np.intp)

        def new_node() -> int:
            for lst, v in ((axis, -1), (split, 0.0), (left, -1), (right, -1), (start, 0), (stop, 0)):
                lst.append(v)
            return len(axis) - 1

        root = new_node()
        stack = [(root, 0, self.n)]
        while stack:
            node, lo, hi = stack.pop()
            ids = perm[lo:hi]
            start[node], stop[node] = lo, hi
            if hi - lo <= self.leaf_size:
                continue
            pts = self._xyz[ids]
            spread = pts.max(axis=0) - pts.min(axis=0)
            ax = int(np.argmax(spread))
            if spread[ax] == 0.0:
                # all points coincide: nothing to split
                continue
            order = np.lexsort((ids, pts[:, ax]))
            perm[lo:hi] = ids[order]
            mid = lo + (hi - lo) // 2
            axis[node] = ax
            split[node] = float(self._xyz[perm[mid], ax])
            l, r = new_node(), new_node()
            left[node], right[node] = l, r
            stack.append((r, mid, hi))
            stack.append((l, lo, mid))

        self._perm = perm
        self._axis = np.array(axis, dtype=np.intp)
        self._split = np.array(split)
        self._left = np.array(left, dtype=np.intp)
        self._right = np.array(right, dtype=np.intp)
        self._start = np.array(start, dtype=np.intp)
        self._stop = np.array(stop, dtype=np.intp)
        for arr in (self._perm, self._axis, self._split, self._left, self._right, self._start, self._stop):
            arr.setflags(write=False)

    def leaf_members(self) -> list[np.ndarray]:
        """Source indices stored in each leaf (kdtree backend only)."""
        if self.backend != "kdtree":
            return [self._all]
        leaves = np.flatnonzero(self._axis == -1)
        return [self._perm[self._start[i]:self._stop[i]] for i in leaves]

    def _check_query(self, query) -> np.ndarray:
        q = np.asarray(query, dtype=float).ravel()
        if q.shape[0] != self.dim:
            raise ValueError(f"query has {q.shape[0]} coordinates, index is {self.dim}D")
        if not np.all(np.isfinite(q)):
            raise ValueError("non-finite query coordinate")
        return q

    def knn(self, query, k: int) -> NeighborSet:
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        q = self._check_query(query)
        k = min(int(k), self.n)
        if self.backend == "linear":
            d2 = _sq_dist(self._xyz, q)
            order = np.lexsort((self._all, d2))[:k]
            return NeighborSet(order.astype(np.intp), np.sqrt(d2[order]))
        return self._tree_knn(q, k)

    def _tree_knn(self, q: np.ndarray, k: int) -> NeighborSet:
        # max-heap of the k best (d2, index) pairs, stored negated
        heap: list[tuple[float, int]] = []
        stack = [(0, 0.0)]
        while stack:
            node, bound = stack.pop()
            if len(heap) == k and bound > -heap[0][0]:
                continue
            ax = self._axis[node]
            if ax == -1:
                ids = self._perm[self._start[node]:self._stop[node]]
                d2 = _sq_dist(self._xyz[ids], q)
                for dist2, i in zip(d2.tolist(), ids.tolist()):
                    item = (-dist2, -i)
                    if len(heap) < k:
                        heapq.heappush(heap, item)
                    elif item > heap[0]:
                        heapq.heapreplace(heap, item)
                continue
            diff = q[ax] - self._split[node]
            near, far = (self._left[node], self._right[node]) if diff <= 0 else (self._right[node], self._left[node])
            # visit the near side first (pushed last)
            stack.append((far, max(bound, diff * diff)))
            stack.append((near, bound))
        heap.sort(reverse=True)
        idx = np.array([-i for _, i in heap], dtype=np.intp)
        d2 = np.array([-d for d, _ in heap])
        return NeighborSet(idx, np.sqrt(d2))

    def knn_many(self, queries, k: int) -> tuple[np.ndarray, np.ndarray]:
        """Row-wise kNN for an ``M x dim`` array; returns ``(indices, distances)``, each ``M x min(k, N)``."""
        queries = np.asarray(queries, dtype=float).reshape(-1, self.dim)
        kk = min(int(k), self.n)
        idx = np.empty((len(queries), kk), dtype=np.intp)
        dist = np.empty((len(queries), kk))
        for row, q in enumerate(queries):
            nb = self.knn(q, k)
            idx[row], dist[row] = nb.indices, nb.distances
        return idx, dist

    def radius_search(self, query, radius: float) -> NeighborSet:
        if not radius > 0:
            raise ValueError(f"radius must be > 0, got {radius}")
        q = self._check_query(query)
        r2 = float(radius) ** 2
        # loose squared bound, exact test on the true distance below
        slack = r2 * (1.0 + 1e-12)
        if self.backend == "linear":
            cand = self._all
        else:
            found = []
            stack = [0]
            while stack:
                node = stack.pop()
                ax = self._axis[node]
                if ax == -1:
                    found.append(self._perm[self._start[node]:self._stop[node]])
                    continue
                diff = q[ax] - self._split[node]
                if diff <= 0 or diff * diff <= slack:
                    stack.append(self._left[node])
                if diff >= 0 or diff * diff <= slack:
                    stack.append(self._right[node])
            cand = np.concatenate(found) if found else np.empty(0, dtype=np.intp)
        d2 = _sq_dist(self._xyz[cand], q)
        keep = np.sqrt(d2) <= radius
        return _ordered(cand[keep], d2[keep])


def build_index(points: PointCloud, backend: str = "kdtree") -> SpatialIndex:
    return SpatialIndex(points, backend)


def knn(index: SpatialIndex, query, k: int) -> NeighborSet:
    return index.knn(query, k)


def radius_search(index: SpatialIndex, query, radius: float) -> NeighborSet:
    return index.radius_search(query, radius)
