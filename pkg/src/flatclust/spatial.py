"""Exact radius queries over a fixed point set via uniform grid hashing.

Both the indexed path and the brute-force path filter candidates with the
same squared-distance routine, so their results agree bit for bit, closed
balls included (<=, never <). Approximate neighbor answers are not allowed
anywhere in the pipeline.
"""

from __future__ import annotations

import math
from itertools import product

import numpy as np

__all__ = ["GridIndex", "sq_dists", "brute_indices_within", "brute_count_within"]


def sq_dists(points: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances from each row of points to x."""
    diff = points - x
    return np.einsum("ij,ij->i", diff, diff)


def brute_indices_within(points: np.ndarray, x, r: float) -> np.ndarray:
    """Indices of all points with |p - x| <= r, by full scan."""
    x = np.asarray(x, dtype=float)
    return np.nonzero(sq_dists(points, x) <= r * r)[0]


def brute_count_within(points: np.ndarray, x, r: float) -> int:
    x = np.asarray(x, dtype=float)
    return int(np.count_nonzero(sq_dists(points, x) <= r * r))


class GridIndex:
    """Hash points into axis-aligned cells of a fixed edge length.

    Query cost is the number of candidate cells touched plus the exact
    distance filter over their contents; when the query box spans more cells
    than are occupied, the occupied cells are scanned instead, which keeps
    high-dimensional queries from enumerating an exponential cell range.
    """

    def __init__(self, points: np.ndarray, cell_size: float):
        points = np.asarray(points, dtype=float)
        if points.ndim != 2 or points.shape[0] == 0:
            raise ValueError("points must be a nonempty (n, dim) array")
        if not cell_size > 0:
            raise ValueError(f"cell_size must be positive, got {cell_size!r}")
        self.points = points
        self.cell_size = float(cell_size)
        self.dim = points.shape[1]
        cells: dict[tuple, list[int]] = {}
        keys = np.floor(points / self.cell_size).astype(np.int64)
        for i, key in enumerate(map(tuple, keys)):
            cells.setdefault(key, []).append(i)
        self._cells = {k: np.asarray(v, dtype=np.intp) for k, v in cells.items()}

    def __len__(self) -> int:
        return self.points.shape[0]

    def _candidates(self, x: np.ndarray, r: float) -> np.ndarray:
        lo = np.floor((x - r) / self.cell_size).astype(np.int64)
        hi = np.floor((x + r) / self.cell_size).astype(np.int64)
        spans = hi - lo + 1
        n_boxes = float(np.prod(spans.astype(float)))
        chunks = []
        if n_boxes <= len(self._cells):
            for key in product(*(range(l, h + 1) for l, h in zip(lo, hi))):
                got = self._cells.get(key)
                if got is not None:
                    chunks.append(got)
        else:
            for key, idx in self._cells.items():
                if all(l <= k <= h for k, l, h in zip(key, lo, hi)):
                    chunks.append(idx)
        if not chunks:
            return np.empty(0, dtype=np.intp)
        return np.concatenate(chunks)

    def indices_within(self, x, r: float) -> np.ndarray:
        """Indices (ascending) of all points with |p - x| <= r."""
        x = np.asarray(x, dtype=float)
        cand = self._candidates(x, r)
        if cand.size == 0:
            return cand
        keep = sq_dists(self.points[cand], x) <= r * r
        return np.sort(cand[keep])

    def count_within(self, x, r: float) -> int:
        x = np.asarray(x, dtype=float)
        cand = self._candidates(x, r)
        if cand.size == 0:
            return 0
        return int(np.count_nonzero(sq_dists(self.points[cand], x) <= r * r))

    def counts_within_all(self, r: float) -> np.ndarray:
        """Neighbor counts |B(p_i, r)| for every indexed point (self included).

        Queries are grouped by cell: all members of one cell share a
        candidate superset, so the exact filter runs as one block per cell.
        """
        out = np.empty(self.points.shape[0], dtype=np.intp)
        r2 = r * r
        # covers floor((x +- r)/h) for every x in the cell
        reach = int(math.floor(r / self.cell_size)) + 1
        for key, members in self._cells.items():
            chunks = []
            lo = tuple(k - reach for k in key)
            hi = tuple(k + reach for k in key)
            n_boxes = float(np.prod([h - l + 1 for l, h in zip(lo, hi)]))
            if n_boxes <= len(self._cells):
                for cand_key in product(*(range(l, h + 1) for l, h in zip(lo, hi))):
                    got = self._cells.get(cand_key)
                    if got is not None:
                        chunks.append(got)
            else:
                for cand_key, idx in self._cells.items():
                    if all(l <= k <= h for k, l, h in zip(cand_key, lo, hi)):
                        chunks.append(idx)
            cand = np.concatenate(chunks)
            cand_pts = self.points[cand]
            for start in range(0, members.size, 256):
                block = members[start : start + 256]
                diff = self.points[block][:, None, :] - cand_pts[None, :, :]
                sq = np.einsum("ckj,ckj->ck", diff, diff)
                out[block] = (sq <= r2).sum(axis=1)
        return out
