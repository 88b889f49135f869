import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from excursions.models import (
    CovarianceModel,
    GaussianFieldSpec,
    GridWindow,
    NonSmoothModelError,
    ShotNoiseSpec,
    cov_at,
    field_kind,
    gaussian_spec_from_config,
    parse_config_text,
    second_spectral_moment,
    shot_noise_spec_from_config,
    tail_prob,
    window_from_config,
)


def _model(family, **kw):
    return CovarianceModel(family=family, **kw)


class TestCovAt:
    def test_origin_is_variance(self):
        m = _model("exponential", scale=1.0, variance=1.0, dim=2)
        assert cov_at(m, [0.0, 0.0]) == 1.0
        m2 = _model("squared_exponential", variance=2.5, dim=1)
        assert cov_at(m2, [0.0]) == 2.5

    def test_exponential_unit_lag(self):
        m = _model("exponential", scale=1.0, dim=1)
        assert cov_at(m, [1.0]) == pytest.approx(math.exp(-1.0), rel=1e-12)

    def test_cauchy_unit_lag(self):
        m = _model("cauchy", scale=1.0, beta=4.0, dim=1)
        assert cov_at(m, [1.0]) == pytest.approx(0.25, rel=1e-12)

    def test_dimension_mismatch(self):
        m = _model("exponential", dim=2)
        with pytest.raises(ValueError):
            cov_at(m, [1.0])

    def test_nonfinite_lag(self):
        m = _model("exponential", dim=1)
        with pytest.raises(ValueError):
            cov_at(m, [math.nan])


class TestValidation:
    def test_unknown_family(self):
        with pytest.raises(ValueError):
            _model("matern")

    def test_cauchy_needs_beta(self):
        with pytest.raises(ValueError):
            _model("cauchy")

    def test_beta_only_for_cauchy(self):
        with pytest.raises(ValueError):
            _model("exponential", beta=2.0)

    def test_decay_warning_when_alpha_small(self):
        with pytest.warns(UserWarning, match="3d"):
            _model("cauchy", beta=2.0, dim=1)

    def test_no_warning_for_fast_decay(self, recwarn):
        _model("cauchy", beta=4.0, dim=1)
        _model("exponential", dim=3)
        assert not recwarn.list


@settings(max_examples=60, deadline=None)
@given(
    family=st.sampled_from(["exponential", "squared_exponential", "cauchy", "nugget"]),
    r=st.floats(min_value=0.0, max_value=50.0),
    scale=st.floats(min_value=0.1, max_value=5.0),
)
def test_correlation_bounded_and_radially_nonincreasing(family, r, scale):
    beta = 7.0 if family == "cauchy" else None
    m = CovarianceModel(family=family, scale=scale, beta=beta, dim=2)
    rho = m.corr_radial(r)
    assert -1.0 <= rho <= 1.0
    assert m.corr_radial(0.0) == 1.0
    assert m.corr_radial(r + 0.5) <= rho + 1e-15


class TestSecondSpectralMoment:
    def test_squared_exponential_unit(self):
        assert second_spectral_moment(
            _model("squared_exponential", scale=1.0)
        ) == pytest.approx(1.0, rel=1e-12)

    def test_squared_exponential_scale_two(self):
        assert second_spectral_moment(
            _model("squared_exponential", scale=2.0)
        ) == pytest.approx(0.25, rel=1e-12)

    def test_non_smooth_families_raise(self):
        with pytest.raises(NonSmoothModelError):
            second_spectral_moment(_model("exponential"))
        with pytest.raises(NonSmoothModelError):
            second_spectral_moment(_model("nugget"))

    @pytest.mark.parametrize(
        "model",
        [
            _model("squared_exponential", scale=0.7, variance=1.3),
            _model("cauchy", scale=1.4, beta=5.0, variance=0.9),
        ],
    )
    def test_matches_finite_differences(self, model):
        h = 1e-4
        fd = -(model.cov_at([h]) - 2.0 * model.cov_at([0.0]) + model.cov_at([-h])) / h**2
        assert second_spectral_moment(model) == pytest.approx(fd, rel=1e-6)


class TestTailProb:
    def test_symmetry_at_mean(self):
        spec = GaussianFieldSpec(0.0, _model("exponential"))
        assert tail_prob(spec, 0.0) == 0.5
        spec2 = GaussianFieldSpec(2.0, _model("exponential", variance=4.0))
        assert tail_prob(spec2, 2.0) == 0.5

    def test_five_percent_quantile(self):
        spec = GaussianFieldSpec(0.0, _model("exponential"))
        assert tail_prob(spec, 1.6449) == pytest.approx(0.0500, abs=1e-4)

    def test_monotone_decreasing(self):
        spec = GaussianFieldSpec(0.3, _model("squared_exponential", variance=2.0))
        us = np.linspace(-5, 5, 41)
        psi = [tail_prob(spec, u) for u in us]
        assert all(b < a for a, b in zip(psi, psi[1:]))

    def test_level_for_tail_inverts(self):
        spec = GaussianFieldSpec(1.0, _model("exponential", variance=2.0))
        for p in (0.1, 0.5, 0.9):
            assert tail_prob(spec, spec.level_for_tail(p)) == pytest.approx(p, rel=1e-12)


class TestShotNoiseSpec:
    def test_second_moment_by_law(self):
        det = ShotNoiseSpec(1.0, mark_mean=2.0, mark_law="deterministic")
        exp = ShotNoiseSpec(1.0, mark_mean=2.0, mark_law="exponential")
        assert det.mark_second_moment == 4.0
        assert exp.mark_second_moment == 8.0

    def test_gaussian_bump_integrals(self):
        sn = ShotNoiseSpec(1.0, kernel="gaussian_bump", kernel_width=0.5)
        assert sn.kernel_integral(2) == pytest.approx(2 * math.pi * 0.25, rel=1e-12)
        assert sn.kernel_square_integral(2) == pytest.approx(math.pi * 0.25, rel=1e-12)

    def test_ball_integrals(self):
        sn = ShotNoiseSpec(1.0, kernel="ball_indicator", kernel_width=2.0)
        assert sn.kernel_integral(2) == pytest.approx(math.pi * 4.0, rel=1e-12)
        assert sn.truncation_radius() == 2.0

    def test_tail_mass_below_eps_at_truncation(self):
        sn = ShotNoiseSpec(1.0, kernel="gaussian_bump", kernel_width=1.0)
        r = sn.truncation_radius()
        # profile at the truncation radius is exactly trunc_eps
        assert math.exp(-r * r / 2.0) == pytest.approx(sn.trunc_eps, rel=1e-9)
        assert sn.kernel_tail_mass(r, 2) < sn.kernel_integral(2) * 1e-7

    def test_campbell_moments(self):
        sn = ShotNoiseSpec(2.0, mark_mean=1.0, mark_law="exponential",
                           kernel="gaussian_bump", kernel_width=0.5)
        assert sn.mean_value(2) == pytest.approx(2.0 * 1.0 * math.pi / 2.0, rel=1e-12)
        assert sn.variance_value(2) == pytest.approx(2.0 * 2.0 * math.pi / 4.0, rel=1e-12)


class TestGridWindow:
    def test_volume_and_extents(self):
        w = GridWindow((4, 8), 0.5)
        assert w.d == 2
        assert w.n_sites == 32
        assert w.volume == pytest.approx(8.0)
        assert w.extents == (2.0, 4.0)

    def test_dimension_bounds(self):
        with pytest.raises(ValueError):
            GridWindow((2, 2, 2, 2), 1.0)
        with pytest.raises(ValueError):
            GridWindow((0,), 1.0)

    def test_boundary_ratio_decreasing_in_size(self):
        ratios = [GridWindow((n, n), 1.0).boundary_ratio(2.0) for n in (16, 32, 64, 128)]
        assert all(b < a for a, b in zip(ratios, ratios[1:]))
        assert ratios[-1] < 0.2


class TestConfig:
    def test_parse_and_build(self):
        text = """
        # comment
        field = gaussian
        family = cauchy
        beta = 7.0
        scale = 1.5
        variance = 2.0
        mean = 0.5
        dims = 32,16
        spacing = 0.25
        """
        cfg = parse_config_text(text)
        assert field_kind(cfg) == "gaussian"
        w = window_from_config(cfg)
        assert w.dims == (32, 16) and w.spacing == 0.25
        spec = gaussian_spec_from_config(cfg)
        assert spec.mean == 0.5
        assert spec.cov.family == "cauchy"
        assert spec.cov.beta == 7.0
        assert spec.cov.dim == 2

    def test_shot_noise_config(self):
        cfg = parse_config_text(
            "field = shot_noise\nlambda = 1.5\nmark_law = exponential\n"
            "kernel = ball_indicator\nkernel_width = 0.7\ndims = 8\n"
        )
        sn = shot_noise_spec_from_config(cfg)
        assert sn.intensity == 1.5
        assert sn.kernel == "ball_indicator"

    def test_bad_line_raises(self):
        with pytest.raises(ValueError, match="line 2"):
            parse_config_text("a = 1\nnonsense\n")

    def test_unknown_field_kind(self):
        with pytest.raises(ValueError):
            field_kind({"field": "levy"})
