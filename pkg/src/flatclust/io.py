"""File formats, pipeline configuration, and the batch clustering run.

Formats are deliberately plain and stable:

- series CSV: header ``series_id,time,v1,...,vs``; one observation per row,
  times in (0,1], '.' decimal, UTF-8, LF or CRLF. Floats are emitted with 17
  significant digits so an emit/ingest round trip is exact.
- points CSV: header ``point_id,x1,...,x{sd}``.
- assignments CSV: header ``series_id,cluster`` with NOISE encoded as -1.
- configs, manifests, cluster trees, and experiment reports: JSON with
  sorted keys, so identical runs produce identical bytes.

Ingest rejects malformed input with the offending line number; nothing is
silently repaired.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .clustering import NOISE, ClusterTree, cluster_tree, dbscan_cluster
from .density import delta_schedule, k_of_lambda, lambda_of_k
from .series import GridSeries, RawSeries, flatten
from .smoothing import SmootherConfig, estimate_grid_series, gamma_schedule

__all__ = [
    "ParseError",
    "PipelineConfig",
    "ingest_series_csv",
    "emit_series_csv",
    "ingest_points_csv",
    "emit_points_csv",
    "emit_assignments_csv",
    "emit_labels_csv",
    "write_json_document",
    "read_json_document",
    "run_cluster",
    "run_smooth",
]


class ParseError(ValueError):
    """Malformed input file; carries the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


@dataclass(frozen=True)
class PipelineConfig:
    """User-facing knobs for one clustering run.

    Exactly one of k / level must be set; "auto" resolves delta and gamma
    from the sample via the built-in schedules.
    """

    s: int
    d: int
    delta: float | str = "auto"
    gamma: float | str = "auto"
    k: int | None = None
    level: float | None = None
    link_radius: float | None = None
    clip: bool = True
    seed: int = 0
    lattice_resolution: int = 200
    k_ladder: tuple | None = None

    def __post_init__(self):
        if self.s < 1 or self.d < 1:
            raise ValueError(f"s and d must be >= 1, got s={self.s}, d={self.d}")
        if (self.k is None) == (self.level is None):
            raise ValueError("exactly one of k / level must be provided")
        if self.k is not None and self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.level is not None and not self.level > 0:
            raise ValueError(f"level must be positive, got {self.level}")
        for name in ("delta", "gamma"):
            v = getattr(self, name)
            if isinstance(v, str):
                if v != "auto":
                    raise ValueError(f"{name} must be a positive number or 'auto', got {v!r}")
            elif not v > 0:
                raise ValueError(f"{name} must be positive, got {v!r}")
        if self.link_radius is not None and not self.link_radius > 0:
            raise ValueError(f"link_radius must be positive, got {self.link_radius}")
        if self.k_ladder is not None:
            object.__setattr__(self, "k_ladder", tuple(int(k) for k in self.k_ladder))

    def to_dict(self) -> dict:
        return {
            "s": self.s,
            "d": self.d,
            "delta": self.delta,
            "gamma": self.gamma,
            "k": self.k,
            "lambda": self.level,
            "link_radius": self.link_radius,
            "clip": self.clip,
            "seed": self.seed,
            "lattice_resolution": self.lattice_resolution,
            "k_ladder": list(self.k_ladder) if self.k_ladder is not None else None,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PipelineConfig":
        known = {
            "s",
            "d",
            "delta",
            "gamma",
            "k",
            "level",
            "link_radius",
            "clip",
            "seed",
            "lattice_resolution",
            "k_ladder",
        }
        out = {}
        for key, value in doc.items():
            name = "level" if key == "lambda" else key
            if name not in known:
                raise ValueError(f"unknown config key {key!r}")
            out[name] = value
        missing = {"s", "d"} - out.keys()
        if missing:
            raise ValueError(f"config is missing required keys: {sorted(missing)}")
        if out.get("k_ladder") is not None:
            out["k_ladder"] = tuple(out["k_ladder"])
        return cls(**out)


# ---------------------------------------------------------------------------
# CSV formats
# ---------------------------------------------------------------------------


def ingest_series_csv(path) -> list[RawSeries]:
    """Parse a series CSV into RawSeries, grouped by id and sorted by time."""
    text = Path(path).read_text(encoding="utf-8")
    reader = csv.reader(_io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty file, header required", line=1) from None
    if len(header) < 3 or header[0] != "series_id" or header[1] != "time":
        raise ParseError(
            f"header must be series_id,time,v1,...,vs; got {','.join(header)}", line=1
        )
    s = len(header) - 2
    expected = [f"v{i}" for i in range(1, s + 1)]
    if header[2:] != expected:
        raise ParseError(
            f"value columns must be {','.join(expected)}; got {','.join(header[2:])}", line=1
        )
    rows: dict[str, list[tuple[float, tuple]]] = {}
    seen: set[tuple[str, float]] = set()
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != s + 2:
            raise ParseError(f"expected {s + 2} fields, got {len(row)}", line=lineno)
        sid = row[0]
        try:
            t = float(row[1])
            values = tuple(float(v) for v in row[2:])
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from None
        if not 0.0 < t <= 1.0:
            raise ParseError(f"time {t} outside (0, 1]", line=lineno)
        if (sid, t) in seen:
            raise ParseError(f"duplicate (series_id, time) = ({sid}, {t})", line=lineno)
        seen.add((sid, t))
        rows.setdefault(sid, []).append((t, values))
    out = []
    for sid, obs in rows.items():
        obs.sort(key=lambda pair: pair[0])
        times = np.array([t for t, _ in obs])
        values = np.array([v for _, v in obs])
        out.append(RawSeries(id=sid, s=s, times=times, values=values))
    return out


def emit_series_csv(path, series: list[RawSeries] | list[GridSeries]) -> None:
    """Write raw or grid series in the ingestible series CSV format."""
    if not series:
        raise ValueError("nothing to write")
    s = series[0].s
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("series_id,time," + ",".join(f"v{i}" for i in range(1, s + 1)) + "\n")
        for sr in series:
            for t, vals in zip(sr.times, sr.values):
                fh.write(sr.id + "," + _fmt(t) + "," + ",".join(_fmt(v) for v in vals) + "\n")


def emit_points_csv(path, points: np.ndarray, ids: list[str] | None = None) -> None:
    points = np.asarray(points, dtype=float)
    sd = points.shape[1]
    ids = ids or [f"p{i:06d}" for i in range(points.shape[0])]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("point_id," + ",".join(f"x{i}" for i in range(1, sd + 1)) + "\n")
        for pid, row in zip(ids, points):
            fh.write(pid + "," + ",".join(_fmt(v) for v in row) + "\n")


def ingest_points_csv(path) -> tuple[list[str], np.ndarray]:
    text = Path(path).read_text(encoding="utf-8")
    reader = csv.reader(_io.StringIO(text))
    header = next(reader, None)
    if not header or header[0] != "point_id":
        raise ParseError("header must be point_id,x1,...,x{sd}", line=1)
    sd = len(header) - 1
    ids, rows = [], []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != sd + 1:
            raise ParseError(f"expected {sd + 1} fields, got {len(row)}", line=lineno)
        ids.append(row[0])
        try:
            rows.append([float(v) for v in row[1:]])
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from None
    return ids, np.asarray(rows, dtype=float)


def emit_assignments_csv(path, ids: list[str], assignments) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("series_id,cluster\n")
        for sid, label in zip(ids, assignments):
            fh.write(f"{sid},{int(label)}\n")


def emit_labels_csv(path, ids: list[str], labels) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("id,label\n")
        for sid, label in zip(ids, labels):
            fh.write(f"{sid},{int(label)}\n")


def write_json_document(path, doc: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json_document(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# Batch runs
# ---------------------------------------------------------------------------


def _resolve_gamma(cfg: PipelineConfig, m: int) -> float:
    return gamma_schedule(m) if cfg.gamma == "auto" else float(cfg.gamma)


def _resolve_k(cfg: PipelineConfig, n: int, delta: float, sd: int) -> int:
    if cfg.k is not None:
        return cfg.k
    raw = k_of_lambda(cfg.level, n, delta, sd)
    rounded = round(raw)
    k = rounded if abs(raw - rounded) < 1e-9 else math.ceil(raw)
    return max(1, int(k))


def run_smooth(cfg: PipelineConfig, series: list[RawSeries]) -> list[GridSeries]:
    """Smooth every raw series onto the clustering grid."""
    out = []
    for sr in series:
        if sr.s != cfg.s:
            raise ValueError(f"series {sr.id!r} has s={sr.s}, config expects {cfg.s}")
        if sr.m <= cfg.d:
            raise ValueError(f"series {sr.id!r} has m={sr.m} <= d={cfg.d}; need m > d")
        smoother = SmootherConfig(gamma=_resolve_gamma(cfg, sr.m), clip=cfg.clip)
        out.append(estimate_grid_series(sr, cfg.d, smoother))
    return out


def _tree_document(tree: ClusterTree, ids: list[str], n: int, sd: int) -> dict:
    levels = []
    for level in tree.levels:
        lab = level.labeling
        clusters = []
        for c in range(lab.n_clusters):
            clusters.append(
                {
                    "id": c,
                    "parent": level.parents[c] if level.parents else None,
                    "members": [ids[i] for i in lab.members(c)],
                }
            )
        levels.append(
            {
                "k": level.k,
                "lambda": lambda_of_k(level.k, n, tree.delta, sd),
                "clusters": clusters,
                "noise": [ids[i] for i in np.nonzero(lab.assignments == NOISE)[0]],
            }
        )
    return {"delta": tree.delta, "link_radius": tree.link_radius, "levels": levels}


def run_cluster(cfg: PipelineConfig, series: list[RawSeries]) -> dict:
    """Smooth, flatten, and cluster a batch of raw series.

    Returns a dict with the assignment table, the run manifest, and (when a
    k-ladder is configured) the cluster-tree document.
    """
    grids = run_smooth(cfg, series)
    ids = [g.id for g in grids]
    points = np.stack([flatten(g).coords for g in grids])
    n, sd = points.shape
    delta = delta_schedule(n, sd) if cfg.delta == "auto" else float(cfg.delta)
    link = 2.0 * delta if cfg.link_radius is None else float(cfg.link_radius)
    k = _resolve_k(cfg, n, delta, sd)
    labeling = dbscan_cluster(points, k=k, delta=delta, link_radius=link)
    gammas = {sr.id: _resolve_gamma(cfg, sr.m) for sr in series}
    manifest = {
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "n_series": n,
        "resolved": {
            "delta": delta,
            "gamma": gammas,
            "k": k,
            "lambda_of_k": lambda_of_k(k, n, delta, sd),
            "link_radius": link,
            "sd": sd,
        },
    }
    out = {
        "ids": ids,
        "assignments": labeling.assignments,
        "labeling": labeling,
        "manifest": manifest,
        "tree": None,
    }
    if cfg.k_ladder is not None:
        tree = cluster_tree(points, delta, cfg.k_ladder, link_radius=link)
        out["tree"] = _tree_document(tree, ids, n, sd)
    return out
