"""Seeded Monte Carlo experiments for the pipeline's convergence claims.

Each experiment runs a geometric ladder of sample sizes with independent
per-trial seed streams, reports per-rung raw values plus a least-squares
log-log slope where a rate is claimed, and judges itself against declared
tolerance bands. Same config + seed reproduces every number exactly.

Slope bands are deliberately loose (0.3x to 2x the theoretical exponent):
desk-scale ladders cannot pin nonparametric exponents tightly, the bands
exist to catch gross regressions.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .clustering import cluster_tree, dbscan_cluster, hartigan_disjoint
from .density import (
    KdeModel,
    delta_schedule,
    evaluation_lattice,
    kde_counts_batch,
    kde_eval_batch,
)
from .geometry import ball_sym_diff_bound, ball_sym_diff_volume
from .series import flatten, grid_times
from .smoothing import SmootherConfig, estimate_grid_series, gamma_schedule
from .synthetic import (
    ClusterTemplate,
    FunctionFamilySpec,
    MixtureSpec,
    TemplateComponent,
    gap_family,
    grid_resolution_templates,
    lipschitz_family,
    sample_raw_series,
    single_bump_mixture_1d,
    two_bump_mixture_1d,
)

__all__ = [
    "ExperimentReport",
    "KdeRateConfig",
    "SandwichConfig",
    "HartiganConfig",
    "SmoothingRateConfig",
    "NoisyKdeGapConfig",
    "SymDiffConfig",
    "GridResolutionConfig",
    "CompensatingConfig",
    "kde_rate_experiment",
    "sandwich_experiment",
    "hartigan_experiment",
    "smoothing_rate_experiment",
    "noisy_kde_gap_experiment",
    "sym_diff_mc_experiment",
    "grid_resolution_experiment",
    "compensating_experiment",
    "rate_fn",
    "compensating_differential",
    "run_experiment",
    "experiment_names",
    "REGISTRY",
]

# Band multipliers around a theoretical exponent for slope checks.
SLOPE_BAND = (0.3, 2.0)

# Constants asserted only to exist by the theory; calibrated once on the
# pinned default seeds and stored here.
SANDWICH_C_PRIME = 6.0
GAP_Z_PRIME = 5.0

_LATTICE_SALT = 987_654_321
_QUERY_SALT = 31_337


def _sanitize(obj):
    """Make report payloads JSON-clean (plain ints/floats/lists/dicts)."""
    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return [_sanitize(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


@dataclass
class ExperimentReport:
    """Everything one experiment run produced, reproducible from config+seed.

    wall_clock_s is kept on the object but left out of the serialized
    document so that pinned-seed reruns emit byte-identical files.
    """

    name: str
    config: dict
    seed: int
    rows: list
    curves: dict
    checks: dict
    passed: bool
    slope: float | None = None
    slope_residual: float | None = None
    flags: list = field(default_factory=list)
    wall_clock_s: float = 0.0

    def to_document(self) -> dict:
        return _sanitize(
            {
                "name": self.name,
                "config": self.config,
                "seed": self.seed,
                "rows": self.rows,
                "curves": self.curves,
                "checks": self.checks,
                "passed": self.passed,
                "slope": self.slope,
                "slope_residual": self.slope_residual,
                "flags": self.flags,
            }
        )


def _validate_ladder(ladder, what: str) -> tuple[int, ...]:
    ladder = tuple(int(v) for v in ladder)
    if len(ladder) == 0:
        raise ValueError(f"{what} must be nonempty")
    if any(b <= a for a, b in zip(ladder, ladder[1:])):
        raise ValueError(f"{what} must be strictly increasing, got {ladder}")
    if len(ladder) >= 3:
        ratios = [b / a for a, b in zip(ladder, ladder[1:])]
        if any(abs(r / ratios[0] - 1.0) > 0.25 for r in ratios):
            raise ValueError(f"{what} must be geometric, got {ladder}")
    return ladder


def _fit_loglog(xs, ys) -> tuple[float, float]:
    """Least-squares slope and residual of log(y) against log(x)."""
    lx = np.log(np.asarray(xs, dtype=float))
    ly = np.log(np.maximum(np.asarray(ys, dtype=float), 1e-300))
    design = np.column_stack([lx, np.ones_like(lx)])
    coef, res, _, _ = np.linalg.lstsq(design, ly, rcond=None)
    residual = float(res[0]) if res.size else 0.0
    return float(coef[0]), residual


def _inversions_up(values) -> int:
    """How often the sequence rises when it should not."""
    v = np.asarray(values, dtype=float)
    return int(np.sum(v[1:] > v[:-1] * (1.0 + 1e-12)))


def _inversions_down(values) -> int:
    v = np.asarray(values, dtype=float)
    return int(np.sum(v[1:] < v[:-1] * (1.0 - 1e-12)))


def _trial_rng(seed: int, *path: int) -> np.random.Generator:
    return np.random.default_rng([seed, *path])


def _in_box(points: np.ndarray, box: np.ndarray) -> np.ndarray:
    return np.all((points >= box[:, 0]) & (points <= box[:, 1]), axis=1)


# ---------------------------------------------------------------------------
# KDE sup-norm rate
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KdeRateConfig:
    n_ladder: tuple = (256, 512, 1024, 2048, 4096, 8192, 16384)
    trials: int = 20
    seed: int = 20240
    mixture: MixtureSpec = field(default_factory=single_bump_mixture_1d)
    lattice_resolution: int = 200
    delta_scale: float = 1.0

    def to_dict(self) -> dict:
        return {
            "n_ladder": list(self.n_ladder),
            "trials": self.trials,
            "seed": self.seed,
            "mixture": self.mixture.to_dict(),
            "lattice_resolution": self.lattice_resolution,
            "delta_scale": self.delta_scale,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "KdeRateConfig":
        out = dict(doc)
        if "mixture" in out:
            out["mixture"] = MixtureSpec.from_dict(out["mixture"])
        if "n_ladder" in out:
            out["n_ladder"] = tuple(out["n_ladder"])
        return cls(**out)


def kde_rate_experiment(cfg: KdeRateConfig) -> ExperimentReport:
    """Median sup-lattice KDE error along an n-ladder against the known mixture."""
    t0 = time.perf_counter()
    ladder = _validate_ladder(cfg.n_ladder, "n_ladder")
    spec = cfg.mixture
    sd = spec.sd
    lattice = evaluation_lattice(
        sd, cfg.lattice_resolution, seed=[cfg.seed, _LATTICE_SALT]
    )
    truth = np.asarray(spec.density(lattice), dtype=float)
    rows = []
    medians = []
    flags = []
    for r, n in enumerate(ladder):
        delta = delta_schedule(n, sd, cfg.delta_scale)
        errors = []
        for t in range(cfg.trials):
            pts, _ = spec.sample(n, _trial_rng(cfg.seed, r, t))
            model = KdeModel(pts, delta)
            est = kde_eval_batch(model, lattice)
            errors.append(float(np.max(np.abs(est - truth))))
        med = float(np.median(errors))
        medians.append(med)
        rows.append(
            {
                "n": n,
                "delta": delta,
                "mesh": math.log(n) / n,
                "median_sup_error": med,
                "errors": errors,
            }
        )
    xs = [row["mesh"] for row in rows]
    exponent = 1.0 / (2.0 + sd)
    checks = {"error_nonincreasing_le_1_inversion": _inversions_up(medians) <= 1}
    slope = residual = None
    if len(ladder) >= 5:
        slope, residual = _fit_loglog(xs, medians)
        checks["slope_in_band"] = (
            SLOPE_BAND[0] * exponent <= slope <= SLOPE_BAND[1] * exponent
        )
    else:
        flags.append("insufficient-data: slope fit needs >= 5 rungs")
    curves = {
        "log_error_vs_log_mesh": [
            [math.log(x), math.log(m)] for x, m in zip(xs, medians)
        ]
    }
    return ExperimentReport(
        name="kde_rate",
        config=cfg.to_dict(),
        seed=cfg.seed,
        rows=rows,
        curves=curves,
        checks=checks,
        passed=all(checks.values()),
        slope=slope,
        slope_residual=residual,
        flags=flags,
        wall_clock_s=time.perf_counter() - t0,
    )


# ---------------------------------------------------------------------------
# Level-set sandwich
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SandwichConfig:
    n: int = 4096
    trials: int = 100
    seed: int = 20241
    mixture: MixtureSpec = field(default_factory=single_bump_mixture_1d)
    level: float | None = None
    lattice_resolution: int = 200
    delta_scale: float = 1.0
    fixed_epsilon_constant: float | None = None

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "trials": self.trials,
            "seed": self.seed,
            "mixture": self.mixture.to_dict(),
            "level": self.level,
            "lattice_resolution": self.lattice_resolution,
            "delta_scale": self.delta_scale,
            "fixed_epsilon_constant": self.fixed_epsilon_constant,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SandwichConfig":
        out = dict(doc)
        if "mixture" in out:
            out["mixture"] = MixtureSpec.from_dict(out["mixture"])
        return cls(**out)


def sandwich_experiment(cfg: SandwichConfig) -> ExperimentReport:
    """Lattice inclusions {p >= lam+eps} within {p_hat >= lam} within {p >= lam-eps}.

    With eps measured per trial as the realized sup lattice error the
    inclusions are pointwise algebra and must hold on every trial; with a
    fixed a-priori eps = c' (log n / n)^(1/(2+sd)) they hold with high
    frequency once c' is calibrated.
    """
    t0 = time.perf_counter()
    spec = cfg.mixture
    sd = spec.sd
    lam = cfg.level if cfg.level is not None else 0.5 * (spec.lambda_star + spec.peak_density)
    if not spec.lambda_star < lam < spec.peak_density:
        raise ValueError(
            f"level {lam} must lie strictly between lambda_star={spec.lambda_star} "
            f"and the peak {spec.peak_density}"
        )
    delta = delta_schedule(cfg.n, sd, cfg.delta_scale)
    lattice = evaluation_lattice(sd, cfg.lattice_resolution, seed=[cfg.seed, _LATTICE_SALT])
    truth = np.asarray(spec.density(lattice), dtype=float)
    rows = []
    hits = 0
    for t in range(cfg.trials):
        pts, _ = spec.sample(cfg.n, _trial_rng(cfg.seed, 0, t))
        model = KdeModel(pts, delta)
        est = kde_eval_batch(model, lattice)
        if cfg.fixed_epsilon_constant is None:
            eps = float(np.max(np.abs(est - truth)))
        else:
            eps = cfg.fixed_epsilon_constant * (math.log(cfg.n) / cfg.n) ** (1.0 / (2.0 + sd))
        upper_ok = bool(np.all(est[truth >= lam + eps] >= lam))
        lower_ok = bool(np.all(truth[est >= lam] >= lam - eps))
        ok = upper_ok and lower_ok
        hits += ok
        rows.append(
            {
                "trial": t,
                "epsilon": eps,
                "upper_inclusion": upper_ok,
                "lower_inclusion": lower_ok,
                "lower_trivial": lam - eps <= 0.0,
                "ok": ok,
            }
        )
    freq = hits / cfg.trials
    if cfg.fixed_epsilon_constant is None:
        checks = {"inclusion_frequency_is_one": freq == 1.0}
    else:
        checks = {"inclusion_frequency_ge_09": freq >= 0.9}
    return ExperimentReport(
        name="sandwich",
        config=cfg.to_dict(),
        seed=cfg.seed,
        rows=rows,
        curves={"inclusion_frequency": [[float(cfg.n), freq]]},
        checks=checks,
        passed=all(checks.values()),
        flags=[f"level={lam}", f"delta={delta}", f"inclusion_frequency={freq}"],
        wall_clock_s=time.perf_counter() - t0,
    )


# ---------------------------------------------------------------------------
# Hartigan separation trend
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HartiganConfig:
    n_ladder: tuple = (256, 512, 1024, 2048)
    trials: int = 200
    seed: int = 20242
    mixture: MixtureSpec = field(default_factory=two_bump_mixture_1d)
    component_pair: tuple = (0, 1)
    delta_scale: float = 1.0

    def to_dict(self) -> dict:
        return {
            "n_ladder": list(self.n_ladder),
            "trials": self.trials,
            "seed": self.seed,
            "mixture": self.mixture.to_dict(),
            "component_pair": list(self.component_pair),
            "delta_scale": self.delta_scale,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "HartiganConfig":
        out = dict(doc)
        if "mixture" in out:
            out["mixture"] = MixtureSpec.from_dict(out["mixture"])
        if "n_ladder" in out:
            out["n_ladder"] = tuple(out["n_ladder"])
        if "component_pair" in out:
            out["component_pair"] = tuple(out["component_pair"])
        return cls(**out)


def _k_ladder(n: int) -> tuple[int, ...]:
    """Descending powers of four from n down to 1."""
    ks = []
    k = n
    while k > 1:
        ks.append(k)
        k = max(1, k // 4)
    ks.append(1)
    return tuple(dict.fromkeys(ks))


def hartigan_experiment(cfg: HartiganConfig) -> ExperimentReport:
    """Frequency with which two population cores land in disjoint tree clusters."""
    t0 = time.perf_counter()
    ladder = _validate_ladder(cfg.n_ladder, "n_ladder")
    spec = cfg.mixture
    if spec.C < 2:
        raise ValueError("need a mixture with at least two components")
    if not spec.margin > 0.0:
        raise ValueError("component margin must be positive")
    i, j = cfg.component_pair
    core_a = spec.inner_core(i)
    core_b = spec.inner_core(j)
    rows = []
    freqs = []
    for r, n in enumerate(ladder):
        delta = delta_schedule(n, spec.sd, cfg.delta_scale)
        ks = _k_ladder(n)
        separated = 0
        degenerate = 0
        for t in range(cfg.trials):
            pts, _ = spec.sample(n, _trial_rng(cfg.seed, r, t))
            a_idx = np.nonzero(_in_box(pts, core_a))[0]
            b_idx = np.nonzero(_in_box(pts, core_b))[0]
            if a_idx.size == 0 or b_idx.size == 0:
                degenerate += 1
                continue
            tree = cluster_tree(pts, delta, ks)
            separated += hartigan_disjoint(tree, a_idx, b_idx)
        freq = separated / cfg.trials
        freqs.append(freq)
        rows.append(
            {
                "n": n,
                "delta": delta,
                "margin_over_delta": spec.margin / delta,
                "ks": list(ks),
                "separation_frequency": freq,
                "degenerate_trials": degenerate,
            }
        )
    checks = {
        "frequency_nondecreasing_le_1_inversion": _inversions_down(freqs) <= 1,
        "final_frequency_ge_095": freqs[-1] >= 0.95,
    }
    return ExperimentReport(
        name="hartigan",
        config=cfg.to_dict(),
        seed=cfg.seed,
        rows=rows,
        curves={"separation_frequency_vs_n": [[float(n), f] for n, f in zip(ladder, freqs)]},
        checks=checks,
        passed=all(checks.values()),
        wall_clock_s=time.perf_counter() - t0,
    )


# ---------------------------------------------------------------------------
# Smoothing sup-error rate
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SmoothingRateConfig:
    m_ladder: tuple = (64, 128, 256, 512, 1024, 2048, 4096)
    trials: int = 20
    series_per_trial: int = 20
    seed: int = 20243
    family: FunctionFamilySpec = field(default_factory=lambda: lipschitz_family(d=4, eps_bar=0.05))

    def to_dict(self) -> dict:
        return {
            "m_ladder": list(self.m_ladder),
            "trials": self.trials,
            "series_per_trial": self.series_per_trial,
            "seed": self.seed,
            "family": self.family.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SmoothingRateConfig":
        out = dict(doc)
        if "family" in out:
            out["family"] = FunctionFamilySpec.from_dict(out["family"])
        if "m_ladder" in out:
            out["m_ladder"] = tuple(out["m_ladder"])
        return cls(**out)


def smoothing_rate_experiment(cfg: SmoothingRateConfig) -> ExperimentReport:
    """sup_i of the flattened grid estimation error along an m-ladder.

    Noiseless families must obey the exact bias bound l_f * gamma_m at every
    rung; noisy families are judged by the fitted rate exponent.
    """
    t0 = time.perf_counter()
    ladder = _validate_ladder(cfg.m_ladder, "m_ladder")
    fam = cfg.family
    d = fam.d
    if any(m <= d for m in ladder):
        raise ValueError(f"every ladder rung must exceed d={d}, got {ladder}")
    l_f = fam.lipschitz
    rows = []
    medians = []
    flags = []
    noiseless = fam.eps_bar == 0.0
    bias_bound_ok = True
    for r, m in enumerate(ladder):
        gamma = gamma_schedule(m)
        smoother = SmootherConfig(gamma=gamma)
        sups = []
        for t in range(cfg.trials):
            raws, _, grids = sample_raw_series(
                fam, cfg.series_per_trial, m, _trial_rng(cfg.seed, r, t)
            )
            worst = 0.0
            for raw, true_grid in zip(raws, grids):
                est = estimate_grid_series(raw, d, smoother)
                worst = max(worst, float(np.max(np.abs(est.values - true_grid.values))))
            sups.append(worst)
            if noiseless and worst > l_f * gamma:
                bias_bound_ok = False
        med = float(np.median(sups))
        medians.append(med)
        rows.append(
            {
                "m": m,
                "gamma": gamma,
                "mesh": math.log(m) / m,
                "bias_bound": l_f * gamma,
                "median_sup_error": med,
                "sup_errors": sups,
            }
        )
    xs = [row["mesh"] for row in rows]
    checks = {}
    if noiseless:
        checks["noiseless_error_le_lf_gamma"] = bias_bound_ok
    slope = residual = None
    if len(ladder) >= 5:
        slope, residual = _fit_loglog(xs, medians)
        if not noiseless:
            checks["slope_in_band"] = (
                SLOPE_BAND[0] / 3.0 <= slope <= SLOPE_BAND[1] / 3.0
            )
    else:
        flags.append("insufficient-data: slope fit needs >= 5 rungs")
    curves = {
        "log_error_vs_log_mesh": [[math.log(x), math.log(m)] for x, m in zip(xs, medians)]
    }
    return ExperimentReport(
        name="smoothing_rate",
        config=cfg.to_dict(),
        seed=cfg.seed,
        rows=rows,
        curves=curves,
        checks=checks,
        passed=all(checks.values()) if checks else True,
        slope=slope,
        slope_residual=residual,
        flags=flags,
        wall_clock_s=time.perf_counter() - t0,
    )


# ---------------------------------------------------------------------------
# Gap between the clean and the estimated-sample KDE
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NoisyKdeGapConfig:
    n: int = 512
    m_ladder: tuple = (64, 128, 256, 512, 1024, 2048, 4096)
    trials: int = 10
    seed: int = 20244
    family: FunctionFamilySpec = field(default_factory=gap_family)
    queries: int = 512
    delta_scale: float = 1.0
    z_prime: float = GAP_Z_PRIME

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "m_ladder": list(self.m_ladder),
            "trials": self.trials,
            "seed": self.seed,
            "family": self.family.to_dict(),
            "queries": self.queries,
            "delta_scale": self.delta_scale,
            "z_prime": self.z_prime,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "NoisyKdeGapConfig":
        out = dict(doc)
        if "family" in out:
            out["family"] = FunctionFamilySpec.from_dict(out["family"])
        if "m_ladder" in out:
            out["m_ladder"] = tuple(out["m_ladder"])
        return cls(**out)


def noisy_kde_gap_experiment(cfg: NoisyKdeGapConfig) -> ExperimentReport:
    """Max query-lattice gap |KDE from estimated points - KDE from true points|.

    The gap must fall with m, stay under z' * eps_m / delta where eps_m is
    the measured sup estimation error, and obey the pointwise recount bound
    (membership-flip count over the normalizer) on every query.
    """
    t0 = time.perf_counter()
    ladder = _validate_ladder(cfg.m_ladder, "m_ladder")
    fam = cfg.family
    d = fam.d
    if any(m <= d for m in ladder):
        raise ValueError(f"every ladder rung must exceed d={d}, got {ladder}")
    sd = fam.s * d
    delta = delta_schedule(cfg.n, sd, cfg.delta_scale)
    queries = evaluation_lattice(sd, resolution=23, mc_points=cfg.queries, seed=[cfg.seed, _QUERY_SALT])
    if queries.shape[0] > cfg.queries:
        queries = queries[: cfg.queries]
    rows = []
    gap_medians = []
    recount_ok = True
    for r, m in enumerate(ladder):
        gamma = gamma_schedule(m)
        smoother = SmootherConfig(gamma=gamma)
        gaps = []
        eps_list = []
        pmax_list = []
        for t in range(cfg.trials):
            raws, _, grids = sample_raw_series(fam, cfg.n, m, _trial_rng(cfg.seed, r, t))
            clean = np.stack([flatten(g).coords for g in grids])
            est = np.stack(
                [flatten(estimate_grid_series(raw, d, smoother)).coords for raw in raws]
            )
            eps_inf = float(np.max(np.abs(clean - est)))
            eps_list.append(math.sqrt(sd) * eps_inf)
            model_clean = KdeModel(clean, delta)
            model_est = KdeModel(est, delta)
            c_clean = kde_counts_batch(model_clean, queries)
            c_est = kde_counts_batch(model_est, queries)
            norm = model_clean.normalizer
            gap_q = np.abs(c_est - c_clean) / norm
            gaps.append(float(np.max(gap_q)))
            pmax_list.append(float(np.max(c_clean) / norm))
            flips = _membership_flips(clean, est, queries, delta)
            if np.any(np.abs(c_est - c_clean) > flips):
                recount_ok = False
        med_gap = float(np.median(gaps))
        gap_medians.append(med_gap)
        rows.append(
            {
                "m": m,
                "gamma": gamma,
                "delta": delta,
                "median_gap": med_gap,
                "gaps": gaps,
                "median_eps": float(np.median(eps_list)),
                "median_peak_density": float(np.median(pmax_list)),
            }
        )
    checks = {
        "gap_nonincreasing_le_1_inversion": _inversions_up(gap_medians) <= 1,
        "pointwise_recount_bound": recount_ok,
        "gap_le_zprime_eps_over_delta": all(
            row["median_gap"] <= cfg.z_prime * row["median_eps"] / delta for row in rows
        ),
        "final_gap_below_5pct_of_peak": rows[-1]["median_gap"]
        <= 0.05 * rows[-1]["median_peak_density"],
    }
    return ExperimentReport(
        name="noisy_kde_gap",
        config=cfg.to_dict(),
        seed=cfg.seed,
        rows=rows,
        curves={
            "gap_vs_m": [[float(m), g] for m, g in zip(ladder, gap_medians)]
        },
        checks=checks,
        passed=all(checks.values()),
        wall_clock_s=time.perf_counter() - t0,
    )


def _membership_flips(
    clean: np.ndarray, est: np.ndarray, queries: np.ndarray, delta: float
) -> np.ndarray:
    """Per query: how many sample balls the estimation error moved across."""
    r2 = delta * delta
    d1 = queries[:, None, :] - clean[None, :, :]
    d2 = queries[:, None, :] - est[None, :, :]
    in_clean = np.einsum("qnj,qnj->qn", d1, d1) <= r2
    in_est = np.einsum("qnj,qnj->qn", d2, d2) <= r2
    return (in_clean != in_est).sum(axis=1)


# ---------------------------------------------------------------------------
# Ball symmetric-difference validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SymDiffConfig:
    dims: tuple = (1, 2, 3, 4)
    pairs_per_dim: int = 10_000
    mc_pairs_per_dim: int = 25
    mc_budget: int = 1_000_000
    seed: int = 20245

    def to_dict(self) -> dict:
        return {
            "dims": list(self.dims),
            "pairs_per_dim": self.pairs_per_dim,
            "mc_pairs_per_dim": self.mc_pairs_per_dim,
            "mc_budget": self.mc_budget,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SymDiffConfig":
        out = dict(doc)
        if "dims" in out:
            out["dims"] = tuple(out["dims"])
        return cls(**out)


def _sym_diff_mc(dist: float, delta: float, dim: int, budget: int, rng) -> tuple[float, float]:
    """Rejection-sampling estimate of the symmetric-difference volume."""
    lo = np.full(dim, -delta)
    hi = np.full(dim, delta)
    hi[0] = dist + delta
    box_vol = float(np.prod(hi - lo))
    center_b = np.zeros(dim)
    center_b[0] = dist
    hits = 0
    done = 0
    chunk = 250_000
    while done < budget:
        take = min(chunk, budget - done)
        pts = rng.uniform(lo, hi, size=(take, dim))
        in_a = np.einsum("ij,ij->i", pts, pts) <= delta * delta
        d_b = pts - center_b
        in_b = np.einsum("ij,ij->i", d_b, d_b) <= delta * delta
        hits += int(np.count_nonzero(in_a != in_b))
        done += take
    p = hits / budget
    return p * box_vol, math.sqrt(max(p * (1.0 - p), 1e-12) / budget) * box_vol


def sym_diff_mc_experiment(cfg: SymDiffConfig) -> ExperimentReport:
    """Exact-vs-bound violations and Monte Carlo z-scores for the ball geometry."""
    t0 = time.perf_counter()
    if any(dim > 6 for dim in cfg.dims):
        raise ValueError("dims above 6 are not supported")
    rows = []
    total_violations = 0
    max_abs_z = 0.0
    for dim in cfg.dims:
        rng = _trial_rng(cfg.seed, dim)
        deltas = rng.uniform(0.3, 1.2, size=cfg.pairs_per_dim)
        fracs = rng.uniform(0.05, 1.0, size=cfg.pairs_per_dim)
        dists = fracs * deltas
        violations = 0
        for dist, delta in zip(dists, deltas):
            exact = ball_sym_diff_volume(dist, delta, dim)
            bound = ball_sym_diff_bound(dist, delta, dim)
            if exact > bound * (1.0 + 1e-12):
                violations += 1
        zs = []
        for i in range(min(cfg.mc_pairs_per_dim, cfg.pairs_per_dim)):
            exact = ball_sym_diff_volume(dists[i], deltas[i], dim)
            mc, se = _sym_diff_mc(dists[i], deltas[i], dim, cfg.mc_budget, rng)
            zs.append((mc - exact) / se)
        dim_max_z = float(np.max(np.abs(zs))) if zs else 0.0
        max_abs_z = max(max_abs_z, dim_max_z)
        total_violations += violations
        rows.append(
            {
                "dim": dim,
                "pairs": cfg.pairs_per_dim,
                "bound_violations": violations,
                "mc_pairs": len(zs),
                "max_abs_z": dim_max_z,
                "z_scores": zs,
            }
        )
    checks = {
        "zero_bound_violations": total_violations == 0,
        "mc_z_within_4": max_abs_z <= 4.0,
    }
    return ExperimentReport(
        name="sym_diff_mc",
        config=cfg.to_dict(),
        seed=cfg.seed,
        rows=rows,
        curves={"max_abs_z_vs_dim": [[float(r["dim"]), r["max_abs_z"]] for r in rows]},
        checks=checks,
        passed=all(checks.values()),
        wall_clock_s=time.perf_counter() - t0,
    )


# ---------------------------------------------------------------------------
# Grid resolution scenario
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GridResolutionConfig:
    templates: tuple = field(default_factory=grid_resolution_templates)
    d_pair: tuple = (5, 20)
    n_per_template: int = 20
    k: int = 5
    delta: float = 0.1
    seed: int = 20246
    expected_counts: tuple = (1, 2)
    require_coincident: bool = True

    def to_dict(self) -> dict:
        return {
            "templates": [
                {
                    "offset_jitter": c.offset_jitter,
                    "amp_jitter": c.amp_jitter,
                    "components": [
                        {
                            "kind": t.kind,
                            "offset": t.offset,
                            "amp": t.amp,
                            "freq": t.freq,
                            "phase": t.phase,
                            "slope": t.slope,
                            "jump_time": t.jump_time,
                            "jump_size": t.jump_size,
                        }
                        for t in c.components
                    ],
                }
                for c in self.templates
            ],
            "d_pair": list(self.d_pair),
            "n_per_template": self.n_per_template,
            "k": self.k,
            "delta": self.delta,
            "seed": self.seed,
            "expected_counts": list(self.expected_counts),
            "require_coincident": self.require_coincident,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "GridResolutionConfig":
        out = dict(doc)
        if "templates" in out:
            out["templates"] = tuple(
                ClusterTemplate(
                    components=tuple(TemplateComponent(**t) for t in c["components"]),
                    offset_jitter=float(c.get("offset_jitter", 0.0)),
                    amp_jitter=float(c.get("amp_jitter", 0.0)),
                )
                for c in out["templates"]
            )
        for key in ("d_pair", "expected_counts"):
            if key in out:
                out[key] = tuple(out[key])
        return cls(**out)


def grid_resolution_experiment(cfg: GridResolutionConfig) -> ExperimentReport:
    """Cluster counts for the same template pair at a coarse and a fine grid."""
    t0 = time.perf_counter()
    a, b = cfg.templates
    d_coarse, d_fine = cfg.d_pair
    if not d_fine > d_coarse >= 1:
        raise ValueError(f"need d_fine > d_coarse >= 1, got {cfg.d_pair}")
    coarse = grid_times(d_coarse)
    mismatch = float(np.max(np.abs(a.eval(coarse) - b.eval(coarse))))
    if cfg.require_coincident and mismatch > 1e-9:
        raise ValueError(
            f"templates differ by {mismatch} on the coarse grid; "
            "pass require_coincident=False to run anyway"
        )
    rows = []
    counts = []
    for d in cfg.d_pair:
        rng = _trial_rng(cfg.seed, d)
        pts = []
        for template in cfg.templates:
            grid = grid_times(d)
            for _ in range(cfg.n_per_template):
                scales, shifts = template.draw_jitter(rng)
                pts.append(template.eval(grid, scales, shifts).reshape(-1))
        pts = np.stack(pts)
        labeling = dbscan_cluster(pts, k=cfg.k, delta=cfg.delta)
        counts.append(labeling.n_clusters)
        rows.append({"d": d, "n_clusters": labeling.n_clusters, "noise": int(np.sum(labeling.assignments == -1))})
    checks = {"counts_match_expected": tuple(counts) == tuple(cfg.expected_counts)}
    return ExperimentReport(
        name="grid_resolution",
        config=cfg.to_dict(),
        seed=cfg.seed,
        rows=rows,
        curves={"clusters_vs_d": [[float(d), float(c)] for d, c in zip(cfg.d_pair, counts)]},
        checks=checks,
        passed=all(checks.values()),
        flags=[f"coarse_grid_mismatch={mismatch}"],
        wall_clock_s=time.perf_counter() - t0,
    )


# ---------------------------------------------------------------------------
# Dimension-compensation arithmetic
# ---------------------------------------------------------------------------


def rate_fn(n: float, s: int, d: float) -> float:
    """Sup-norm convergence rate (log n / n)^(1/(2+s*d)); d may be real."""
    if n < 3:
        raise ValueError(f"n must be >= 3, got {n}")
    return (math.log(n) / n) ** (1.0 / (2.0 + s * d))


def compensating_differential(n: float, s: int, d: int) -> tuple[float, float]:
    """Extra samples needed to keep the rate when d grows by one.

    Returns (closed_form, numeric): the closed form evaluates the published
    approximation 0.74 (n / log n)^(2 + 2s/(2+sd)) - n verbatim; the numeric
    value solves rate(n + delta, d+1) = rate(n, d) by bracketed root search.
    """
    if n < 3:
        raise ValueError(f"n must be >= 3, got {n}")
    closed = 0.74 * (n / math.log(n)) ** (2.0 + 2.0 * s / (2.0 + s * d)) - n
    target = rate_fn(n, s, d)

    def g(big_n: float) -> float:
        return rate_fn(big_n, s, d + 1) - target

    cap = max(1e12, n * (n / math.log(n)) ** (2.0 + 2.0 * s / (2.0 + s * d)))
    hi = 2.0 * n
    while g(hi) > 0.0:
        hi *= 8.0
        if hi > cap:
            raise OverflowError(f"no bracket for the compensating differential below {cap}")
    big_n = brentq(g, n, hi, rtol=1e-13, maxiter=500)
    return closed, big_n - n


@dataclass(frozen=True)
class CompensatingConfig:
    n_values: tuple = (1_000, 10_000, 100_000, 1_000_000)
    s_values: tuple = (1,)
    d_values: tuple = (1, 2, 3, 4)
    seed: int = 0

    def to_dict(self) -> dict:
        return {
            "n_values": list(self.n_values),
            "s_values": list(self.s_values),
            "d_values": list(self.d_values),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "CompensatingConfig":
        out = dict(doc)
        for key in ("n_values", "s_values", "d_values"):
            if key in out:
                out[key] = tuple(out[key])
        return cls(**out)


def compensating_experiment(cfg: CompensatingConfig) -> ExperimentReport:
    """Tabulate closed-form vs numeric compensation and the rate's d-derivative."""
    t0 = time.perf_counter()
    rows = []
    backsub_ok = True
    partial_ok = True
    ratios = []
    h = 1e-5
    for s in cfg.s_values:
        for d in cfg.d_values:
            for n in cfg.n_values:
                closed, numeric = compensating_differential(n, s, d)
                resid = abs(rate_fn(n + numeric, s, d + 1) - rate_fn(n, s, d)) / rate_fn(n, s, d)
                partial = (rate_fn(n, s, d + h) - rate_fn(n, s, d - h)) / (2.0 * h)
                ratio = closed / numeric
                ratios.append(ratio)
                backsub_ok &= resid <= 1e-9
                partial_ok &= partial > 0.0
                rows.append(
                    {
                        "n": n,
                        "s": s,
                        "d": d,
                        "closed_form": closed,
                        "numeric": numeric,
                        "ratio": ratio,
                        "backsub_rel_residual": resid,
                        "rate_partial_d": partial,
                    }
                )
    checks = {
        "backsubstitution_rel_1e9": backsub_ok,
        "rate_partial_d_positive": partial_ok,
        "closed_form_ratio_in_band": all(0.2 <= r <= 5.0 for r in ratios),
    }
    return ExperimentReport(
        name="compensating",
        config=cfg.to_dict(),
        seed=cfg.seed,
        rows=rows,
        curves={"ratio_vs_n": [[float(r["n"]), r["ratio"]] for r in rows]},
        checks=checks,
        passed=all(checks.values()),
        flags=[f"ratio_range=[{min(ratios)}, {max(ratios)}]"],
        wall_clock_s=time.perf_counter() - t0,
    )


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------

REGISTRY: dict[str, tuple[type, Callable]] = {
    "kde_rate": (KdeRateConfig, kde_rate_experiment),
    "sandwich": (SandwichConfig, sandwich_experiment),
    "hartigan": (HartiganConfig, hartigan_experiment),
    "smoothing_rate": (SmoothingRateConfig, smoothing_rate_experiment),
    "noisy_kde_gap": (NoisyKdeGapConfig, noisy_kde_gap_experiment),
    "sym_diff_mc": (SymDiffConfig, sym_diff_mc_experiment),
    "grid_resolution": (GridResolutionConfig, grid_resolution_experiment),
    "compensating": (CompensatingConfig, compensating_experiment),
}


def experiment_names() -> list[str]:
    return sorted(REGISTRY)


def run_experiment(name: str, config: dict | None = None) -> ExperimentReport:
    """Run a registered experiment from a plain config dict."""
    if name not in REGISTRY:
        raise KeyError(
            f"unknown experiment {name!r}; available: {', '.join(experiment_names())}"
        )
    config_cls, runner = REGISTRY[name]
    cfg = config_cls.from_dict(config or {})
    return runner(cfg)
