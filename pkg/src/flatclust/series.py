"""Data model for time series at three stages of the pipeline.

RawSeries holds the noisy observed sample of one series; GridSeries holds its
values at the d clustering timepoints t = 1/d, ..., 1; FlatPoint is the
time-major concatenation of a GridSeries into a single point of [0,1]^(s*d).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "RawSeries",
    "GridSeries",
    "FlatPoint",
    "grid_times",
    "flatten",
    "unflatten",
    "flat_array",
    "grid_sup_distance",
]


def _as_readonly(a, dtype=float) -> np.ndarray:
    out = np.array(a, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class RawSeries:
    """One noisy multivariate time sample: m observations of an s-dim path.

    Times must be strictly increasing and lie in (0, 1]. Values may leave
    [0, 1]; observation noise is allowed to push them out.
    """

    id: str
    s: int
    times: np.ndarray
    values: np.ndarray
    m: int = field(init=False)

    def __post_init__(self):
        if self.s < 1:
            raise ValueError(f"component count s must be >= 1, got {self.s}")
        times = _as_readonly(self.times)
        values = _as_readonly(self.values)
        if times.ndim != 1 or times.size == 0:
            raise ValueError("times must be a nonempty 1-d array")
        if np.any(times <= 0.0) or np.any(times > 1.0):
            raise ValueError("times must lie in (0, 1]")
        if np.any(np.diff(times) <= 0.0):
            raise ValueError("times must be strictly increasing")
        if values.shape != (times.size, self.s):
            raise ValueError(
                f"values must have shape (m, s) = ({times.size}, {self.s}), got {values.shape}"
            )
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "m", int(times.size))

    @classmethod
    def from_uniform(cls, id: str, values, s: int | None = None) -> "RawSeries":
        """Build a series sampled at j/m for j = 1..m."""
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        m = values.shape[0]
        return cls(id=id, s=s or values.shape[1], times=np.arange(1, m + 1) / m, values=values)


@dataclass(frozen=True)
class GridSeries:
    """A series evaluated (or estimated) at the d clustering timepoints.

    Slot j holds the s-vector at t = (j+1)/d; every coordinate must lie in
    [0, 1].
    """

    id: str
    s: int
    d: int
    values: np.ndarray

    def __post_init__(self):
        if self.s < 1 or self.d < 1:
            raise ValueError(f"s and d must be >= 1, got s={self.s}, d={self.d}")
        values = _as_readonly(self.values)
        if values.shape != (self.d, self.s):
            raise ValueError(
                f"values must have shape (d, s) = ({self.d}, {self.s}), got {values.shape}"
            )
        if np.any(values < 0.0) or np.any(values > 1.0):
            raise ValueError("grid values must lie in [0, 1]")
        object.__setattr__(self, "values", values)

    @property
    def times(self) -> np.ndarray:
        return grid_times(self.d)


@dataclass(frozen=True)
class FlatPoint:
    """A point of [0,1]^(s*d): the flattened form of one grid series."""

    coords: np.ndarray
    source_id: str = ""

    def __post_init__(self):
        coords = _as_readonly(self.coords)
        if coords.ndim != 1 or coords.size == 0:
            raise ValueError("coords must be a nonempty 1-d array")
        if np.any(coords < 0.0) or np.any(coords > 1.0):
            raise ValueError("flattened coordinates must lie in [0, 1]")
        object.__setattr__(self, "coords", coords)

    def __len__(self) -> int:
        return self.coords.size


def grid_times(d: int) -> np.ndarray:
    """The clustering grid 1/d, 2/d, ..., 1."""
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    return np.arange(1, d + 1) / d


def flatten(g: GridSeries) -> FlatPoint:
    """Concatenate grid values time-major: the s-block at t=1/d comes first."""
    return FlatPoint(coords=g.values.reshape(g.d * g.s), source_id=g.id)


def unflatten(p: FlatPoint, s: int) -> GridSeries:
    """Invert `flatten`; the component count s fixes the block structure."""
    if s < 1 or len(p) % s != 0:
        raise ValueError(f"coordinate count {len(p)} is not a multiple of s={s}")
    d = len(p) // s
    return GridSeries(id=p.source_id, s=s, d=d, values=p.coords.reshape(d, s))


def flat_array(points: Sequence[FlatPoint] | np.ndarray) -> np.ndarray:
    """Stack flat points into an (n, sd) float array; arrays pass through."""
    if isinstance(points, np.ndarray):
        out = np.asarray(points, dtype=float)
        if out.ndim == 1:
            out = out[None, :]
        return out
    if len(points) == 0:
        return np.empty((0, 0))
    return np.stack([np.asarray(getattr(p, "coords", p), dtype=float) for p in points])


def grid_sup_distance(
    f: Callable[[float], Sequence[float]],
    g: Callable[[float], Sequence[float]],
    d: int,
) -> float:
    """Max Euclidean distance between two vector paths over the grid 1/d..1."""
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    best = 0.0
    for t in grid_times(d):
        diff = np.asarray(f(t), dtype=float) - np.asarray(g(t), dtype=float)
        best = max(best, float(np.sqrt(np.sum(diff * diff))))
    return best
