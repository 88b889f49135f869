"""Asymptotic Gaussianity test from one field realization.

The covariance of normalized multi-level excursion volumes is estimated
by non-overlapping block subsampling, and the quadratic-form statistic

    T = (S - Psi V)' C_hat^{-1} (S - Psi V) / V

is referred to the chi-square law with one degree of freedom per level.
The null fully specifies the marginal tail Psi, so no parameters are
estimated from the data beyond C_hat.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .asymptotics import CovMatrix
from .geometry import excursion_volumes
from .models import GaussianFieldSpec
from .simulate import FieldRealization

COND_LIMIT = 1e12
TAIL_GATE = 1e-4


class DegenerateLevelError(ValueError):
    """A level's indicator is constant on the field: singular column."""


class IllConditionedError(RuntimeError):
    """Estimated covariance matrix is too ill-conditioned to invert."""


@dataclass(frozen=True)
class EstimatorConfig:
    """Non-overlapping block subsampling configuration (sites per side)."""

    block_side: int
    min_blocks: int = 8
    overlap: str = "none"

    def __post_init__(self):
        if self.block_side < 1:
            raise ValueError("block_side must be >= 1")
        if self.min_blocks < 1:
            raise ValueError("min_blocks must be >= 1")
        if self.overlap != "none":
            raise ValueError("only non-overlapping blocks are supported")


def default_block_side(window) -> int:
    """Default block side: floor(sqrt(smallest grid side))."""
    return max(1, int(math.isqrt(min(window.dims))))


def default_levels(null_spec: GaussianFieldSpec, r: int = 3) -> list[float]:
    """r levels at equally spaced tail probabilities k/(r+1) of the null."""
    return [null_spec.level_for_tail(k / (r + 1)) for k in range(r, 0, -1)]


def estimate_cov_matrix(
    field: FieldRealization, levels, cfg: EstimatorConfig
) -> CovMatrix:
    """Block-subsampling estimate of the asymptotic covariance matrix.

    The lattice is partitioned into disjoint cubes of ``block_side`` sites
    per axis (trailing remainder sites are discarded); each block's
    excursion-volume vector is centred at the across-block mean and scaled
    by the square root of the block volume. The sample covariance of these
    normalized vectors is a weakly consistent estimator of the asymptotic
    matrix under short-range dependence.
    """
    levels = [float(u) for u in levels]
    window = field.window
    B = cfg.block_side
    counts_per_axis = [n // B for n in window.dims]
    n_blocks = int(np.prod(counts_per_axis))
    if n_blocks < cfg.min_blocks:
        raise ValueError(
            f"window supports only {n_blocks} disjoint blocks of side {B}; "
            f"need at least {cfg.min_blocks}"
        )
    d = window.d
    crop = tuple(slice(0, c * B) for c in counts_per_axis)
    values = field.values[crop]
    # reshape to (blocks..., within-block...) then flatten the block axes
    shape = []
    for c in counts_per_axis:
        shape.extend([c, B])
    blocks = values.reshape(shape)
    order = list(range(0, 2 * d, 2)) + list(range(1, 2 * d, 2))
    blocks = blocks.transpose(order).reshape(n_blocks, B**d)

    cell = window.spacing**d
    block_volume = cell * B**d
    vols = np.empty((n_blocks, len(levels)))
    for j, u in enumerate(levels):
        vols[:, j] = cell * np.count_nonzero(blocks >= u, axis=1)

    spread = vols.max(axis=0) - vols.min(axis=0)
    degenerate = [levels[j] for j in range(len(levels)) if spread[j] == 0.0]
    if degenerate:
        raise DegenerateLevelError(
            f"constant excursion indicator at level(s) {degenerate}; "
            "covariance column is singular"
        )

    y = (vols - vols.mean(axis=0)) / math.sqrt(block_volume)
    entries = np.cov(y, rowvar=False, ddof=1).reshape(len(levels), len(levels))
    entries = 0.5 * (entries + entries.T)
    return CovMatrix(levels=tuple(levels), entries=entries)


def _solve_gated(matrix: np.ndarray, rhs: np.ndarray):
    """Solve a symmetric PSD system behind a condition-number gate."""
    eigs = np.linalg.eigvalsh(matrix)
    if eigs.min() <= 0.0:
        raise IllConditionedError(
            f"estimated covariance is singular (min eigenvalue {eigs.min():g})"
        )
    cond = eigs.max() / eigs.min()
    if cond > COND_LIMIT:
        raise IllConditionedError(
            f"estimated covariance condition number {cond:.3e} exceeds "
            f"{COND_LIMIT:g}"
        )
    return np.linalg.solve(matrix, rhs), cond


def gaussianity_statistic(
    S, psi, c_hat: CovMatrix, window_volume: float
) -> float:
    """Quadratic-form statistic of the multi-level volume deviations.

    Asymptotically chi-square with one degree of freedom per level when
    the null tail probabilities ``psi`` are correct.
    """
    S = np.asarray(S, dtype=float)
    psi = np.asarray(psi, dtype=float)
    dev = S - psi * window_volume
    x, _ = _solve_gated(c_hat.entries, dev)
    return float(dev @ x / window_volume)


@dataclass(frozen=True)
class TestReport:
    """Inputs and outcome of the Gaussianity test."""

    levels: tuple[float, ...]
    volumes: tuple[float, ...]
    tail_probs: tuple[float, ...]
    cov_estimate: np.ndarray
    statistic: float
    df: int
    p_value: float
    alpha: float
    decision: str
    condition_number: float

    @property
    def reject(self) -> bool:
        return self.decision == "reject"

    def to_json_dict(self) -> dict:
        return {
            "schema": "excursions.test-report/1",
            "levels": list(self.levels),
            "volumes": list(self.volumes),
            "tail_probs": list(self.tail_probs),
            "cov_estimate": self.cov_estimate.tolist(),
            "statistic": self.statistic,
            "df": self.df,
            "p_value": self.p_value,
            "alpha": self.alpha,
            "decision": self.decision,
            "condition_number": self.condition_number,
        }


def gaussianity_test(
    field: FieldRealization,
    null_spec: GaussianFieldSpec,
    levels,
    alpha: float = 0.05,
    cfg: EstimatorConfig | None = None,
) -> TestReport:
    """Test whether the field's excursion volumes match a fully specified null.

    Rejects when the statistic exceeds the (1 - alpha) chi-square quantile
    with one degree of freedom per level.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    levels = sorted(float(u) for u in levels)
    if len(levels) != len(set(levels)):
        raise ValueError("levels must be distinct")
    psi = [null_spec.tail_prob(u) for u in levels]
    if any(p < TAIL_GATE or p > 1.0 - TAIL_GATE for p in psi):
        raise ValueError(
            f"null tail probabilities {psi} outside [{TAIL_GATE}, {1 - TAIL_GATE}]; "
            "levels too extreme for a nondegenerate covariance"
        )
    if cfg is None:
        cfg = EstimatorConfig(block_side=default_block_side(field.window))
    c_hat = estimate_cov_matrix(field, levels, cfg)
    vols = [m.volume for m in excursion_volumes(field, levels)]
    window_volume = field.window.volume
    dev = np.asarray(vols) - np.asarray(psi) * window_volume
    x, cond = _solve_gated(c_hat.entries, dev)
    statistic = float(dev @ x / window_volume)
    df = len(levels)
    p_value = float(stats.chi2.sf(statistic, df))
    threshold = float(stats.chi2.ppf(1.0 - alpha, df))
    decision = "reject" if statistic > threshold else "fail_to_reject"
    return TestReport(
        levels=tuple(levels),
        volumes=tuple(vols),
        tail_probs=tuple(psi),
        cov_estimate=c_hat.entries,
        statistic=statistic,
        df=df,
        p_value=p_value,
        alpha=alpha,
        decision=decision,
        condition_number=cond,
    )
