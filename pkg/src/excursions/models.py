"""Stationary random field specifications.

Covariance families with their analytic metadata (correlation, decay
exponent, second spectral moment), marginal field specs (Gaussian, shot
noise) and regular lattice observation windows. Everything here is
deterministic and analytic; simulation lives in :mod:`excursions.simulate`.

Model/window configs are plain ``key = value`` text files, see
:func:`parse_config_text` for the schema.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

FAMILIES = ("exponential", "squared_exponential", "cauchy", "nugget")
SMOOTH_FAMILIES = ("squared_exponential", "cauchy")
MARK_LAWS = ("deterministic", "exponential")
KERNELS = ("gaussian_bump", "ball_indicator")


class NonSmoothModelError(ValueError):
    """The covariance family is not twice differentiable at the origin."""


def unit_ball_volume(d: int) -> float:
    """Volume of the d-dimensional Euclidean unit ball."""
    return math.pi ** (d / 2.0) / special.gamma(d / 2.0 + 1.0)


def unit_sphere_area(d: int) -> float:
    """Surface measure of the unit sphere in d dimensions (d*kappa_d)."""
    return 2.0 * math.pi ** (d / 2.0) / special.gamma(d / 2.0)


@dataclass(frozen=True)
class CovarianceModel:
    """Isotropic stationary covariance C(t) = variance * rho(||t||).

    Families
    --------
    exponential          rho(r) = exp(-r/scale)
    squared_exponential  rho(r) = exp(-r^2 / (2 scale^2))
    cauchy               rho(r) = (1 + r^2/scale^2)^(-beta/2)
    nugget               rho(0) = 1, rho(r) = 0 otherwise (lattice-only)

    All families are nonnegative and radially non-increasing. ``beta`` is
    required for (and only for) the cauchy family; it doubles as the
    polynomial decay exponent used in the alpha > 3d hypothesis check.
    """

    family: str
    scale: float = 1.0
    variance: float = 1.0
    beta: float | None = None
    dim: int = 1

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown covariance family {self.family!r}")
        if not (self.scale > 0.0):
            raise ValueError("scale must be positive")
        if not (self.variance > 0.0):
            raise ValueError("variance must be positive")
        if self.dim < 1:
            raise ValueError("dimension must be >= 1")
        if self.family == "cauchy":
            if self.beta is None or not (self.beta > 0.0):
                raise ValueError("cauchy family requires beta > 0")
        elif self.beta is not None:
            raise ValueError(f"beta is meaningful only for cauchy, not {self.family}")
        if self.decay_exponent <= 3 * self.dim:
            warnings.warn(
                f"covariance decay exponent {self.decay_exponent:g} <= 3d = "
                f"{3 * self.dim}; short-range hypothesis not guaranteed",
                stacklevel=2,
            )

    @property
    def decay_exponent(self) -> float:
        """Polynomial decay exponent alpha; +inf for super-polynomial decay."""
        if self.family == "cauchy":
            return float(self.beta)
        return math.inf

    def corr_radial(self, r):
        """Correlation rho at radial distance r (scalar or array)."""
        r = np.asarray(r, dtype=float)
        if self.family == "exponential":
            out = np.exp(-r / self.scale)
        elif self.family == "squared_exponential":
            out = np.exp(-(r * r) / (2.0 * self.scale * self.scale))
        elif self.family == "cauchy":
            out = (1.0 + (r * r) / (self.scale * self.scale)) ** (-self.beta / 2.0)
        else:  # nugget
            out = np.where(r == 0.0, 1.0, 0.0)
        return out if out.ndim else float(out)

    def corr_at(self, t) -> float:
        t = np.asarray(t, dtype=float)
        if t.shape != (self.dim,):
            raise ValueError(f"lag has shape {t.shape}, expected ({self.dim},)")
        if not np.all(np.isfinite(t)):
            raise ValueError("lag must be finite")
        return float(self.corr_radial(np.linalg.norm(t)))

    def cov_at(self, t) -> float:
        return self.variance * self.corr_at(t)

    def second_spectral_moment(self) -> float:
        """-d^2 C / dt_1^2 at the origin, for twice-differentiable families."""
        if self.family == "squared_exponential":
            return self.variance / self.scale**2
        if self.family == "cauchy":
            return self.variance * self.beta / self.scale**2
        raise NonSmoothModelError(
            f"{self.family} family has no second spectral moment"
        )

    def correlation_range(self, floor: float = 1e-10) -> float:
        """Radius beyond which rho < floor (0 for nugget)."""
        if self.family == "nugget":
            return 0.0
        if self.family == "exponential":
            return self.scale * math.log(1.0 / floor)
        if self.family == "squared_exponential":
            return self.scale * math.sqrt(2.0 * math.log(1.0 / floor))
        return self.scale * math.sqrt(floor ** (-2.0 / self.beta) - 1.0)

    def radial_tail_integral(self, radius: float) -> float:
        """Upper bound on the tail integral of rho over {||t|| > radius}.

        Returns integral_radius^inf r^(d-1) rho(r) dr times the unit sphere
        area; used for quadrature truncation error bounds. Infinite for a
        cauchy model with beta <= d.
        """
        d, s = self.dim, self.scale
        area = unit_sphere_area(d)
        if self.family == "nugget" or radius == math.inf:
            return 0.0
        if self.family == "exponential":
            # int_R^inf r^{d-1} e^{-r/s} dr = s^d Gamma(d, R/s)
            return area * s**d * special.gamma(d) * special.gammaincc(d, radius / s)
        if self.family == "squared_exponential":
            # substitute w = r^2/(2 s^2)
            x = radius**2 / (2.0 * s**2)
            return (
                area
                * 0.5
                * (2.0 * s**2) ** (d / 2.0)
                * special.gamma(d / 2.0)
                * special.gammaincc(d / 2.0, x)
            )
        if self.beta <= d:
            return math.inf
        # rho(r) <= (r/s)^(-beta) for r > 0
        return area * s**self.beta * radius ** (d - self.beta) / (self.beta - d)


@dataclass(frozen=True)
class GaussianFieldSpec:
    """Stationary Gaussian field: marginal law Normal(mean, cov.variance)."""

    mean: float
    cov: CovarianceModel

    @property
    def std(self) -> float:
        return math.sqrt(self.cov.variance)

    def tail_prob(self, u: float) -> float:
        """P(X(o) > u), strictly decreasing in u."""
        return float(stats.norm.sf((u - self.mean) / self.std))

    def level_for_tail(self, psi: float) -> float:
        """Inverse of :meth:`tail_prob`."""
        if not 0.0 < psi < 1.0:
            raise ValueError("tail probability must lie in (0, 1)")
        return self.mean + self.std * float(stats.norm.isf(psi))


@dataclass(frozen=True)
class ShotNoiseSpec:
    """Poisson shot noise: sum of kernels at Poisson points with iid marks.

    ``intensity`` is the mean number of points per unit volume. Marks are
    nonnegative with law ``deterministic`` (constant ``mark_mean``) or
    ``exponential`` (mean ``mark_mean``). Kernels have unit peak value:

    gaussian_bump   phi(t) = exp(-||t||^2 / (2 width^2))
    ball_indicator  phi(t) = 1{||t|| <= width}

    ``trunc_eps`` truncates the kernel where it falls below ``trunc_eps``
    times its peak; the induced stationarity error is analytic (see
    :meth:`kernel_tail_mass`).
    """

    intensity: float
    mark_mean: float = 1.0
    mark_law: str = "deterministic"
    kernel: str = "gaussian_bump"
    kernel_width: float = 1.0
    trunc_eps: float = 1e-10

    def __post_init__(self):
        if self.intensity < 0.0:
            raise ValueError("intensity must be >= 0")
        if not (self.mark_mean > 0.0):
            raise ValueError("mark_mean must be positive")
        if self.mark_law not in MARK_LAWS:
            raise ValueError(f"unknown mark law {self.mark_law!r}")
        if self.kernel not in KERNELS:
            raise ValueError(f"unknown kernel {self.kernel!r}")
        if not (self.kernel_width > 0.0):
            raise ValueError("kernel_width must be positive")
        if not (0.0 < self.trunc_eps < 1.0):
            raise ValueError("trunc_eps must lie in (0, 1)")

    @property
    def mark_second_moment(self) -> float:
        if self.mark_law == "deterministic":
            return self.mark_mean**2
        return 2.0 * self.mark_mean**2

    def truncation_radius(self) -> float:
        """Radius where the kernel profile drops below trunc_eps."""
        if self.kernel == "ball_indicator":
            return self.kernel_width
        return self.kernel_width * math.sqrt(2.0 * math.log(1.0 / self.trunc_eps))

    def kernel_integral(self, d: int) -> float:
        if self.kernel == "gaussian_bump":
            return (2.0 * math.pi * self.kernel_width**2) ** (d / 2.0)
        return unit_ball_volume(d) * self.kernel_width**d

    def kernel_square_integral(self, d: int) -> float:
        if self.kernel == "gaussian_bump":
            return (math.pi * self.kernel_width**2) ** (d / 2.0)
        return unit_ball_volume(d) * self.kernel_width**d

    def kernel_tail_mass(self, radius: float, d: int) -> float:
        """Integral of the kernel outside a ball of the given radius."""
        if self.kernel == "ball_indicator":
            return 0.0 if radius >= self.kernel_width else (
                self.kernel_integral(d)
                - unit_ball_volume(d) * radius**d
            )
        z = (radius / self.kernel_width) ** 2
        return self.kernel_integral(d) * float(stats.chi2.sf(z, d))

    def mean_value(self, d: int) -> float:
        """E X(o) = intensity * E(mark) * integral(kernel)."""
        return self.intensity * self.mark_mean * self.kernel_integral(d)

    def variance_value(self, d: int) -> float:
        """Var X(o) = intensity * E(mark^2) * integral(kernel^2)."""
        return self.intensity * self.mark_second_moment * self.kernel_square_integral(d)


@dataclass(frozen=True)
class GridWindow:
    """Regular lattice window: dims[i] sites per axis, common spacing."""

    dims: tuple[int, ...]
    spacing: float = 1.0

    def __post_init__(self):
        dims = tuple(int(n) for n in self.dims)
        object.__setattr__(self, "dims", dims)
        if not 1 <= len(dims) <= 3:
            raise ValueError("window dimension must be 1, 2 or 3")
        if any(n < 1 for n in dims):
            raise ValueError("all dims must be >= 1")
        if not (self.spacing > 0.0):
            raise ValueError("spacing must be positive")

    @property
    def d(self) -> int:
        return len(self.dims)

    @property
    def n_sites(self) -> int:
        return int(np.prod(self.dims))

    @property
    def extents(self) -> tuple[float, ...]:
        return tuple(n * self.spacing for n in self.dims)

    @property
    def volume(self) -> float:
        """Lattice window volume: spacing^d times the site count."""
        return self.spacing**self.d * self.n_sites

    def axes(self) -> list[np.ndarray]:
        return [np.arange(n) * self.spacing for n in self.dims]

    def boundary_ratio(self, r: float) -> float:
        """vol(boundary dilated by r) / vol(window) for the box window.

        Tends to 0 as all dims grow, which is the growth regime every
        limit-theorem experiment assumes.
        """
        outer = math.prod(L + 2.0 * r for L in self.extents)
        inner = math.prod(max(L - 2.0 * r, 0.0) for L in self.extents)
        return (outer - inner) / self.volume


# Spec-level operation surface (thin wrappers over the model methods).

def cov_at(model: CovarianceModel, t) -> float:
    """Covariance C(t) = variance * rho(||t||)."""
    return model.cov_at(t)


def second_spectral_moment(model: CovarianceModel) -> float:
    """Curvature of C at the origin; raises NonSmoothModelError otherwise."""
    return model.second_spectral_moment()


def tail_prob(spec: GaussianFieldSpec, u: float) -> float:
    """Tail distribution P(X(o) > u) of the Gaussian marginal."""
    return spec.tail_prob(u)


# ---------------------------------------------------------------------------
# Key-value config files
#
# Schema (all values plain text, '#' starts a comment):
#   field        gaussian | shot_noise | white_noise        (default gaussian)
#   family       exponential | squared_exponential | cauchy | nugget
#   scale        covariance length scale
#   beta         cauchy decay exponent
#   variance     marginal variance tau^2
#   mean         marginal mean a
#   lambda       shot noise intensity
#   mark_law     deterministic | exponential
#   mark_mean    mean mark value
#   kernel       gaussian_bump | ball_indicator
#   kernel_width kernel length scale
#   kernel_trunc relative kernel truncation threshold
#   dims         sites per axis, e.g. "256,256"
#   spacing      lattice spacing h
# ---------------------------------------------------------------------------

def parse_config_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines into a dict; later keys win."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def load_config(path) -> dict[str, str]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def window_from_config(cfg: dict[str, str]) -> GridWindow:
    if "dims" not in cfg:
        raise ValueError("config is missing 'dims'")
    dims = tuple(int(tok) for tok in cfg["dims"].replace("x", ",").split(",") if tok)
    return GridWindow(dims=dims, spacing=float(cfg.get("spacing", 1.0)))


def covariance_from_config(cfg: dict[str, str], dim: int | None = None) -> CovarianceModel:
    if dim is None:
        if "dims" in cfg:
            dim = len(window_from_config(cfg).dims)
        else:
            dim = int(cfg.get("dim", 1))
    beta = cfg.get("beta")
    return CovarianceModel(
        family=cfg.get("family", "exponential"),
        scale=float(cfg.get("scale", 1.0)),
        variance=float(cfg.get("variance", 1.0)),
        beta=float(beta) if beta is not None else None,
        dim=dim,
    )


def gaussian_spec_from_config(cfg: dict[str, str], dim: int | None = None) -> GaussianFieldSpec:
    return GaussianFieldSpec(
        mean=float(cfg.get("mean", 0.0)),
        cov=covariance_from_config(cfg, dim=dim),
    )


def shot_noise_spec_from_config(cfg: dict[str, str]) -> ShotNoiseSpec:
    if "lambda" not in cfg:
        raise ValueError("shot noise config is missing 'lambda'")
    return ShotNoiseSpec(
        intensity=float(cfg["lambda"]),
        mark_mean=float(cfg.get("mark_mean", 1.0)),
        mark_law=cfg.get("mark_law", "deterministic"),
        kernel=cfg.get("kernel", "gaussian_bump"),
        kernel_width=float(cfg.get("kernel_width", 1.0)),
        trunc_eps=float(cfg.get("kernel_trunc", 1e-10)),
    )


def field_kind(cfg: dict[str, str]) -> str:
    kind = cfg.get("field", "gaussian")
    if kind not in ("gaussian", "shot_noise", "white_noise"):
        raise ValueError(f"unknown field kind {kind!r}")
    return kind
