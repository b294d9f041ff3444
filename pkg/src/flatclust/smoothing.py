"""Nadaraya-Watson smoothing with a left-side Epanechnikov kernel.

The kernel window at time t is [t - gamma, t]: only past samples enter the
estimate, so a right-continuous jump stops biasing the fit once the window
has moved past it. A symmetric Epanechnikov kernel never sheds that bias at
a jump and is kept here only as a reference for comparison tests.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .series import GridSeries, RawSeries, grid_times

__all__ = [
    "SmootherConfig",
    "EmptyWindowWarning",
    "kernel_le",
    "kernel_symmetric",
    "nw_weights",
    "smooth_at",
    "smooth_at_symmetric",
    "estimate_grid_series",
    "gamma_schedule",
    "gamma_schedule_power",
]


class EmptyWindowWarning(UserWarning):
    """No samples fell inside [t - gamma, t]; the 0/0 convention returned 0."""


@dataclass(frozen=True)
class SmootherConfig:
    """Bandwidth gamma plus the clip-to-[0,1] switch."""

    gamma: float
    clip: bool = True

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma!r}")


def kernel_le(u):
    """Left-side Epanechnikov kernel: 2 - 2u^2 on [-1, 0], zero elsewhere."""
    u = np.asarray(u, dtype=float)
    out = np.where((u >= -1.0) & (u <= 0.0), 2.0 - 2.0 * u * u, 0.0)
    return out if out.ndim else float(out)


def kernel_symmetric(u):
    """Symmetric Epanechnikov kernel, reference only: 0.75(1 - u^2) on [-1, 1]."""
    u = np.asarray(u, dtype=float)
    out = np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0)
    return out if out.ndim else float(out)


def nw_weights(t: float, times: np.ndarray, gamma: float) -> tuple[np.ndarray, bool]:
    """Kernel weights of each sample time for an estimate at t.

    Returns (weights, empty): weights are nonnegative, vanish outside
    [t - gamma, t], and sum to 1 unless no sample falls in the window, in
    which case all weights are zero and empty is True (0/0 := 0).
    """
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma!r}")
    times = np.asarray(times, dtype=float)
    # (t_j - t)/gamma lands in the kernel support [-1, 0] exactly when
    # t_j lies in the backward window [t - gamma, t]
    raw = kernel_le((times - t) / gamma)
    total = raw.sum()
    if total <= 0.0:
        return np.zeros_like(raw), True
    return raw / total, False


def smooth_at(y: RawSeries, t: float, cfg: SmootherConfig) -> np.ndarray:
    """Weighted average of the observations in the window ending at t.

    With an empty window the estimate is the zero vector and
    EmptyWindowWarning is raised.
    """
    if not 0.0 < t <= 1.0:
        raise ValueError(f"t must lie in (0, 1], got {t!r}")
    w, empty = nw_weights(t, y.times, cfg.gamma)
    if empty:
        warnings.warn(
            f"series {y.id!r}: no samples in [{t - cfg.gamma:.6g}, {t:.6g}]",
            EmptyWindowWarning,
            stacklevel=2,
        )
        return np.zeros(y.s)
    est = w @ y.values
    if cfg.clip:
        est = np.clip(est, 0.0, 1.0)
    return est


def smooth_at_symmetric(y: RawSeries, t: float, gamma: float) -> np.ndarray:
    """Reference estimator with the two-sided kernel; not used in the pipeline."""
    raw = kernel_symmetric((t - y.times) / gamma)
    total = raw.sum()
    if total <= 0.0:
        return np.zeros(y.s)
    return (raw / total) @ y.values


def estimate_grid_series(y: RawSeries, d: int, cfg: SmootherConfig) -> GridSeries:
    """Smooth a raw series at every clustering timepoint 1/d, ..., 1.

    Requires m > d. Empty windows produce zero slots and one warning per
    slot; coordinates are clipped into [0, 1] when cfg.clip is set (and
    always on output, since GridSeries requires it).
    """
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    if y.m <= d:
        raise ValueError(f"series {y.id!r} has m={y.m} <= d={d}; need m > d")
    out = np.empty((d, y.s))
    for j, t in enumerate(grid_times(d)):
        out[j] = smooth_at(y, t, cfg)
    if not cfg.clip:
        out = np.clip(out, 0.0, 1.0)
    return GridSeries(id=y.id, s=y.s, d=d, values=out)


def gamma_schedule(m: int) -> float:
    """Bandwidth (log m / m)^(1/3), floored at 2/m.

    The floor guarantees a nonempty left window at every grid time under
    uniform sampling at j/m; the raw schedule can fall below the sample
    spacing for small m.
    """
    if m < 2:
        raise ValueError(f"m must be >= 2, got {m}")
    return max((math.log(m) / m) ** (1.0 / 3.0), 2.0 / m)


def gamma_schedule_power(m: int, alpha: float = 0.5) -> float:
    """Power-law bandwidth m^(-alpha) with the same 2/m floor.

    Any alpha in (0, 1) keeps gamma -> 0 while m * gamma -> infinity.
    """
    if m < 2:
        raise ValueError(f"m must be >= 2, got {m}")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    return max(m**-alpha, 2.0 / m)
