"""Monte Carlo experiments verifying the limit theorems at desk scale.

Each experiment simulates ``replications`` independent fields per window,
computes the normalized excursion statistic, and compares its empirical
law against the analytic target. Lattice-corrected targets (lattice sums
at the simulation spacing) are the ground truth for pass verdicts; the
continuum values are reported alongside with their discretization gap.

Reproducibility: replication ``r`` of window ``w`` uses the seed stream
``w * replications + r`` of the master seed (see
:class:`excursions.simulate.SeedSpec` for the stream derivation); the
size/power study uses streams ``0..R-1`` for the null and ``R..2R-1`` for
the alternative. Per-replication statistics are stored into slots indexed
by replication, so reports are byte-identical for any worker count.
"""

from __future__ import annotations

import csv
import math
import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dataclass_field

import numpy as np
from scipy import stats

from . import asymptotics, geometry
from .inference import EstimatorConfig, default_block_side, gaussianity_test
from .models import (
    GaussianFieldSpec,
    GridWindow,
    ShotNoiseSpec,
    field_kind,
    gaussian_spec_from_config,
    parse_config_text,
    shot_noise_spec_from_config,
)
from .simulate import (
    FieldRealization,
    SeedSpec,
    simulate_gaussian,
    simulate_shot_noise,
    simulate_white_noise,
)

MC_REPORT_SCHEMA = "excursions.mc-report/1"

EXPERIMENT_KINDS = (
    "clt_volume",
    "multivariate_clt",
    "fclt_grid",
    "level_growth",
    "surface_mean",
    "test_size_power",
)

DISTRIBUTIONAL_MIN_REPS = 100


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: field model, window sequence, levels, replication plan."""

    kind: str
    field: str
    windows: tuple[GridWindow, ...]
    replications: int
    master_seed: int
    gauss_spec: GaussianFieldSpec | None = None
    shot_spec: ShotNoiseSpec | None = None
    levels: tuple[float, ...] = ()
    level_coefficient: float | None = None
    alpha: float = 0.05
    block_side: int | None = None
    workers: int = 1
    alt_shot_spec: ShotNoiseSpec | None = None
    tolerances: dict = dataclass_field(default_factory=dict)
    raw_config: dict = dataclass_field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if not self.windows:
            raise ValueError("experiment needs at least one window")
        if self.replications < DISTRIBUTIONAL_MIN_REPS:
            raise ValueError(
                f"distributional checks need >= {DISTRIBUTIONAL_MIN_REPS} "
                "replications"
            )
        if len(self.windows) > 1:
            for prev, nxt in zip(self.windows, self.windows[1:]):
                if not all(b > a for a, b in zip(prev.dims, nxt.dims)):
                    raise ValueError(
                        "window sequence must be strictly increasing per axis"
                    )
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


def parse_experiment_config(text: str) -> ExperimentConfig:
    """Build an experiment from key-value text.

    Keys beyond the model schema of :mod:`excursions.models`:

        kind               experiment kind
        windows            ';'-separated windows, dims 'x'-separated
        levels             comma-separated excursion levels
        level_coefficient  c in the schedule u = c * sqrt(log n)
        replications       Monte Carlo replications per window
        master_seed        integer master seed
        alpha              test significance level
        block              estimator block side (sites)
        workers            concurrent replications
        alt_*              alternative shot-noise model for power studies
        var_rtol, ks_p_min optional verdict tolerances
    """
    cfg = parse_config_text(text)
    spacing = float(cfg.get("spacing", 1.0))
    windows = []
    for token in cfg.get("windows", "").split(";"):
        token = token.strip()
        if token:
            dims = tuple(int(t) for t in token.split("x"))
            windows.append(GridWindow(dims=dims, spacing=spacing))
    if not windows:
        raise ValueError("experiment config is missing 'windows'")
    dim = windows[0].d
    kind_of_field = field_kind(cfg)
    gauss_spec = None
    shot_spec = None
    if kind_of_field in ("gaussian", "white_noise"):
        gauss_spec = gaussian_spec_from_config(cfg, dim=dim)
    else:
        shot_spec = shot_noise_spec_from_config(cfg)
    alt_spec = None
    if "alt_field" in cfg:
        if cfg["alt_field"] != "shot_noise":
            raise ValueError("only shot_noise alternatives are supported")
        alt_cfg = {
            k[len("alt_"):]: v for k, v in cfg.items() if k.startswith("alt_")
        }
        alt_spec = shot_noise_spec_from_config(alt_cfg)
    levels = tuple(
        float(t) for t in cfg.get("levels", "").split(",") if t.strip()
    )
    tolerances = {
        k: float(cfg[k]) for k in ("var_rtol", "ks_p_min") if k in cfg
    }
    return ExperimentConfig(
        kind=cfg.get("kind", "clt_volume"),
        field=kind_of_field,
        windows=tuple(windows),
        replications=int(cfg.get("replications", 200)),
        master_seed=int(cfg.get("master_seed", 0)),
        gauss_spec=gauss_spec,
        shot_spec=shot_spec,
        levels=levels,
        level_coefficient=(
            float(cfg["level_coefficient"]) if "level_coefficient" in cfg else None
        ),
        alpha=float(cfg.get("alpha", 0.05)),
        block_side=int(cfg["block"]) if "block" in cfg else None,
        workers=int(cfg.get("workers", 1)),
        alt_shot_spec=alt_spec,
        tolerances=tolerances,
        raw_config=cfg,
    )


def load_experiment_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_experiment_config(fh.read())


@dataclass(frozen=True)
class MCReport:
    """Machine-readable experiment outcome, one summary per window."""

    kind: str
    master_seed: int
    replications: int
    windows: list
    runtime_seconds: float
    extras: dict = dataclass_field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "schema": MC_REPORT_SCHEMA,
            "kind": self.kind,
            "master_seed": self.master_seed,
            "replications": self.replications,
            "windows": self.windows,
            "runtime_seconds": round(self.runtime_seconds, 3),
            **self.extras,
        }


def _simulate(cfg: ExperimentConfig, window: GridWindow, seed: SeedSpec):
    if cfg.field == "gaussian":
        return simulate_gaussian(cfg.gauss_spec, window, seed)
    if cfg.field == "white_noise":
        return simulate_white_noise(cfg.gauss_spec, window, seed)
    return simulate_shot_noise(cfg.shot_spec, window, seed)


def _map_replications(fn, reps: int, workers: int) -> list:
    out = [None] * reps
    if workers <= 1:
        for r in range(reps):
            out[r] = fn(r)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for r, result in enumerate(pool.map(fn, range(reps))):
                out[r] = result
    return out


def _write_raw(raw_dir, name: str, header: list[str], rows) -> None:
    if raw_dir is None:
        return
    os.makedirs(raw_dir, exist_ok=True)
    with open(os.path.join(raw_dir, name), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _window_tag(window: GridWindow) -> str:
    return "x".join(str(n) for n in window.dims)


def normalized_volume_deviation(
    field: FieldRealization, level: float, tail: float
) -> float:
    """(excursion volume - tail * window volume) / sqrt(window volume)."""
    vol = geometry.excursion_volume(field, level)
    V = field.window.volume
    return (vol - tail * V) / math.sqrt(V)


def run_clt_experiment(cfg: ExperimentConfig, raw_dir=None) -> MCReport:
    """Fixed-level CLT check: empirical variance and KS against the target."""
    if cfg.kind != "clt_volume":
        raise ValueError("config kind must be clt_volume")
    if len(cfg.levels) != 1:
        raise ValueError("clt_volume uses exactly one level")
    level = cfg.levels[0]
    spec = cfg.gauss_spec
    tail = spec.tail_prob(level)
    start = time.perf_counter()
    summaries = []
    R = cfg.replications
    for w, window in enumerate(cfg.windows):
        target_lat = asymptotics.asymptotic_variance_lattice(
            spec, level, window.spacing
        ).value
        target_cont = asymptotics.asymptotic_variance(spec, level).value

        def one(r, _w=w, _window=window):
            fld = _simulate(cfg, _window, SeedSpec(cfg.master_seed, _w * R + r))
            return normalized_volume_deviation(fld, level, tail)

        z = np.array(_map_replications(one, R, cfg.workers))
        emp_var = float(z.var(ddof=1))
        ks_stat, ks_p = stats.kstest(z, stats.norm(0.0, math.sqrt(target_lat)).cdf)
        summary = {
            "dims": list(window.dims),
            "spacing": window.spacing,
            "window_volume": window.volume,
            "level": level,
            "tail_prob": tail,
            "emp_mean": float(z.mean()),
            "emp_var": emp_var,
            "emp_var_se": emp_var * math.sqrt(2.0 / (R - 1)),
            "target_var_lattice": target_lat,
            "target_var_continuum": target_cont,
            "discretization_gap": target_lat - target_cont,
            "ks_stat": float(ks_stat),
            "ks_p": float(ks_p),
        }
        if "var_rtol" in cfg.tolerances:
            summary["var_ok"] = (
                abs(emp_var - target_lat) <= cfg.tolerances["var_rtol"] * target_lat
            )
        if "ks_p_min" in cfg.tolerances:
            summary["ks_ok"] = ks_p > cfg.tolerances["ks_p_min"]
        summaries.append(summary)
        _write_raw(
            raw_dir,
            f"clt_{_window_tag(window)}.csv",
            ["replication", "z"],
            [(r, z[r]) for r in range(R)],
        )
    return MCReport(
        kind=cfg.kind,
        master_seed=cfg.master_seed,
        replications=R,
        windows=summaries,
        runtime_seconds=time.perf_counter() - start,
    )


def run_fclt_experiment(cfg: ExperimentConfig, raw_dir=None) -> MCReport:
    """Level-grid covariance check (multivariate / functional CLT)."""
    if cfg.kind not in ("fclt_grid", "multivariate_clt"):
        raise ValueError("config kind must be fclt_grid or multivariate_clt")
    if not cfg.levels:
        raise ValueError("level grid must be non-empty")
    levels = list(cfg.levels)
    spec = cfg.gauss_spec
    tails = np.array([spec.tail_prob(u) for u in levels])
    m = len(levels)
    start = time.perf_counter()
    summaries = []
    R = cfg.replications
    for w, window in enumerate(cfg.windows):
        target_cont = np.zeros((m, m))
        for i in range(m):
            target_cont[i, i] = asymptotics.asymptotic_variance(spec, levels[i]).value
            for j in range(i + 1, m):
                target_cont[i, j] = target_cont[j, i] = asymptotics.level_covariance(
                    spec, levels[i], levels[j]
                )
        target_lat = asymptotics.lattice_cov_matrix(
            spec, levels, window.spacing
        ).entries

        def one(r, _w=w, _window=window):
            fld = _simulate(cfg, _window, SeedSpec(cfg.master_seed, _w * R + r))
            vols = np.array(
                [mm.volume for mm in geometry.excursion_volumes(fld, levels)]
            )
            V = _window.volume
            return (vols - tails * V) / math.sqrt(V)

        ys = np.array(_map_replications(one, R, cfg.workers))
        emp = np.cov(ys, rowvar=False, ddof=1).reshape(m, m)
        # large-sample standard error of a Gaussian sample covariance entry
        se = np.sqrt(
            (np.outer(np.diag(emp), np.diag(emp)) + emp**2) / R
        )
        zscores = (emp - target_cont) / se
        summary = {
            "dims": list(window.dims),
            "spacing": window.spacing,
            "levels": levels,
            "emp_cov": emp.tolist(),
            "target_cov_continuum": target_cont.tolist(),
            "target_cov_lattice": target_lat.tolist(),
            "cov_se": se.tolist(),
            "max_abs_z_continuum": float(np.abs(zscores).max()),
            "max_abs_z_lattice": float(np.abs((emp - target_lat) / se).max()),
        }
        summaries.append(summary)
        _write_raw(
            raw_dir,
            f"fclt_{_window_tag(window)}.csv",
            ["replication"] + [f"y_{u:g}" for u in levels],
            [(r, *ys[r]) for r in range(R)],
        )
    return MCReport(
        kind=cfg.kind,
        master_seed=cfg.master_seed,
        replications=R,
        windows=summaries,
        runtime_seconds=time.perf_counter() - start,
    )


def run_level_growth_experiment(cfg: ExperimentConfig, raw_dir=None) -> MCReport:
    """Increasing-level CLT: normalize by the exact windowed lattice deviation.

    Levels follow u_n = c * sqrt(log n) with n the per-axis site count of
    each window; c = 0 reduces to the fixed level u = 0.
    """
    if cfg.kind != "level_growth":
        raise ValueError("config kind must be level_growth")
    if cfg.level_coefficient is None:
        raise ValueError("level_growth requires level_coefficient")
    c = cfg.level_coefficient
    spec = cfg.gauss_spec
    start = time.perf_counter()
    summaries = []
    R = cfg.replications
    for w, window in enumerate(cfg.windows):
        n_side = window.dims[0]
        level = c * math.sqrt(math.log(n_side))
        tail = spec.tail_prob(level)
        expected_count = tail * window.n_sites
        if expected_count < 10:
            warnings.warn(
                f"level schedule degenerate: expected excursion count "
                f"{expected_count:.2f} < 10 at window {window.dims}",
                stacklevel=2,
            )
        sigma_n = math.sqrt(
            asymptotics.windowed_variance_lattice(spec, level, window).value
        )

        def one(r, _w=w, _window=window, _level=level, _tail=tail, _s=sigma_n):
            fld = _simulate(cfg, _window, SeedSpec(cfg.master_seed, _w * R + r))
            vol = geometry.excursion_volume(fld, _level)
            return (vol - _tail * _window.volume) / _s

        t = np.array(_map_replications(one, R, cfg.workers))
        emp_var = float(t.var(ddof=1))
        ks_stat, ks_p = stats.kstest(t, stats.norm(0.0, 1.0).cdf)
        summaries.append(
            {
                "dims": list(window.dims),
                "spacing": window.spacing,
                "level": level,
                "tail_prob": tail,
                "expected_excursion_count": expected_count,
                "windowed_std_lattice": sigma_n,
                "emp_mean": float(t.mean()),
                "emp_var": emp_var,
                "ks_stat": float(ks_stat),
                "ks_p": float(ks_p),
            }
        )
        _write_raw(
            raw_dir,
            f"level_growth_{_window_tag(window)}.csv",
            ["replication", "normalized"],
            [(r, t[r]) for r in range(R)],
        )
    return MCReport(
        kind=cfg.kind,
        master_seed=cfg.master_seed,
        replications=R,
        windows=summaries,
        runtime_seconds=time.perf_counter() - start,
    )


def run_surface_experiment(cfg: ExperimentConfig, raw_dir=None) -> MCReport:
    """Mean boundary measure: crossings (d=1) or perimeter (d=2) vs theory."""
    if cfg.kind != "surface_mean":
        raise ValueError("config kind must be surface_mean")
    if len(cfg.levels) != 1:
        raise ValueError("surface_mean uses exactly one level")
    level = cfg.levels[0]
    spec = cfg.gauss_spec
    start = time.perf_counter()
    summaries = []
    R = cfg.replications
    for w, window in enumerate(cfg.windows):
        d = window.d
        if d not in (1, 2):
            raise ValueError("surface_mean supports d in {1, 2}")
        # boundary functionals live on the cell complex spanned by the sites
        span = math.prod((n - 1) * window.spacing for n in window.dims)
        target = asymptotics.mean_surface_area(spec, level, span)

        def one(r, _w=w, _window=window):
            fld = _simulate(cfg, _window, SeedSpec(cfg.master_seed, _w * R + r))
            if _window.d == 1:
                return float(geometry.crossing_count(fld, level))
            return geometry.excursion_perimeter(fld, level)

        vals = np.array(_map_replications(one, R, cfg.workers))
        emp_mean = float(vals.mean())
        emp_se = float(vals.std(ddof=1) / math.sqrt(R))
        summaries.append(
            {
                "dims": list(window.dims),
                "spacing": window.spacing,
                "level": level,
                "span_volume": span,
                "functional": "crossings" if d == 1 else "perimeter",
                "emp_mean": emp_mean,
                "emp_se": emp_se,
                "target_mean": target,
                "ratio": emp_mean / target if target else math.inf,
            }
        )
        _write_raw(
            raw_dir,
            f"surface_{_window_tag(window)}.csv",
            ["replication", "value"],
            [(r, vals[r]) for r in range(R)],
        )
    return MCReport(
        kind=cfg.kind,
        master_seed=cfg.master_seed,
        replications=R,
        windows=summaries,
        runtime_seconds=time.perf_counter() - start,
    )


def standardize_to_null(
    field: FieldRealization, shot_spec: ShotNoiseSpec, null_spec: GaussianFieldSpec
) -> FieldRealization:
    """Affinely map a shot-noise field to the null's mean and variance.

    Uses the analytic moments of the shot-noise marginal, so the
    alternative differs from the null only beyond second order.
    """
    d = field.window.d
    m = shot_spec.mean_value(d)
    s = math.sqrt(shot_spec.variance_value(d))
    values = null_spec.mean + null_spec.std * (field.values - m) / s
    return FieldRealization(
        window=field.window,
        values=values,
        provenance={**field.provenance, "standardized": True},
    )


def run_test_study(cfg: ExperimentConfig, raw_dir=None) -> MCReport:
    """Size (and optionally power) of the Gaussianity test over many seeds."""
    if cfg.kind != "test_size_power":
        raise ValueError("config kind must be test_size_power")
    spec = cfg.gauss_spec
    if spec is None:
        raise ValueError("test_size_power requires a Gaussian null model")
    if len(cfg.windows) != 1:
        raise ValueError("test_size_power uses a single window")
    window = cfg.windows[0]
    levels = list(cfg.levels)
    if not levels:
        raise ValueError("test_size_power requires levels")
    est = EstimatorConfig(
        block_side=cfg.block_side
        if cfg.block_side is not None
        else default_block_side(window)
    )
    start = time.perf_counter()
    R = cfg.replications

    def null_one(r):
        fld = _simulate(cfg, window, SeedSpec(cfg.master_seed, r))
        rep = gaussianity_test(fld, spec, levels, alpha=cfg.alpha, cfg=est)
        return 1 if rep.reject else 0

    null_rejects = _map_replications(null_one, R, cfg.workers)
    size = float(np.mean(null_rejects))
    windows = [
        {
            "dims": list(window.dims),
            "spacing": window.spacing,
            "levels": levels,
            "alpha": cfg.alpha,
            "block_side": est.block_side,
            "null_rejections": int(np.sum(null_rejects)),
            "null_rate": size,
            "null_rate_se": math.sqrt(max(size * (1 - size), 1e-12) / R),
        }
    ]
    rows = [("null", r, null_rejects[r]) for r in range(R)]
    if cfg.alt_shot_spec is not None:

        def alt_one(r):
            fld = simulate_shot_noise(
                cfg.alt_shot_spec, window, SeedSpec(cfg.master_seed, R + r)
            )
            fld = standardize_to_null(fld, cfg.alt_shot_spec, spec)
            rep = gaussianity_test(fld, spec, levels, alpha=cfg.alpha, cfg=est)
            return 1 if rep.reject else 0

        alt_rejects = _map_replications(alt_one, R, cfg.workers)
        power = float(np.mean(alt_rejects))
        windows[0]["alt_rejections"] = int(np.sum(alt_rejects))
        windows[0]["alt_rate"] = power
        windows[0]["alt_rate_se"] = math.sqrt(max(power * (1 - power), 1e-12) / R)
        rows += [("alt", r, alt_rejects[r]) for r in range(R)]
    _write_raw(raw_dir, "test_study.csv", ["arm", "replication", "reject"], rows)
    return MCReport(
        kind=cfg.kind,
        master_seed=cfg.master_seed,
        replications=R,
        windows=windows,
        runtime_seconds=time.perf_counter() - start,
    )


_RUNNERS = {
    "clt_volume": run_clt_experiment,
    "multivariate_clt": run_fclt_experiment,
    "fclt_grid": run_fclt_experiment,
    "level_growth": run_level_growth_experiment,
    "surface_mean": run_surface_experiment,
    "test_size_power": run_test_study,
}


def run_experiment(cfg: ExperimentConfig, raw_dir=None) -> MCReport:
    """Dispatch an experiment to its runner by kind."""
    return _RUNNERS[cfg.kind](cfg, raw_dir=raw_dir)
