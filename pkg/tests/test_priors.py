import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from cauchyinv.exceptions import DimensionError, ParameterError
from cauchyinv.grids import Grid1D, Lattice2D
from cauchyinv.priors import (
    PriorModel,
    analyze_modality,
    conditional_site_density,
    delta_log_prior,
    difference_edges,
    log_prior,
    log_prior_1d,
    log_prior_2d,
    log_prior_gradient,
    scale_for_direction,
)


class TestPriorModel:
    def test_family_is_case_insensitive(self):
        assert PriorModel("Cauchy", 1.0).family == "cauchy"

    @pytest.mark.parametrize(
        "kwargs",
        [dict(family="laplace"), dict(reg=0.0), dict(reg=-1.0), dict(h=0.0), dict(h_prime=-1.0), dict(boundary="periodic")],
    )
    def test_invalid(self, kwargs):
        args = dict(family="cauchy", reg=1.0)
        args.update(kwargs)
        with pytest.raises(ParameterError):
            PriorModel(**args)


class TestLogPrior1D:
    def test_constant_signal_at_unit_scale(self):
        assert log_prior_1d(Grid1D(5, 1.0, np.full(5, 3.2)), PriorModel("cauchy", 1.0)) == 0.0

    def test_constant_signal_general_scale(self):
        # each of the n-1 terms is log(lh) - log((lh)^2)
        lam, h, n = 3.0, 0.1, 7
        val = log_prior_1d(np.zeros(n), PriorModel("cauchy", lam, h=h))
        assert val == pytest.approx(-(n - 1) * math.log(lam * h))

    def test_tv_single_jump(self):
        assert log_prior_1d(np.array([0.0, 1.0]), PriorModel("tv", 2.0)) == -2.0

    def test_cauchy_two_points(self):
        assert log_prior_1d(np.array([0.0, 3.0]), PriorModel("cauchy", 2.0)) == pytest.approx(-1.8718, abs=1e-4)

    def test_gaussian_uses_stable_variance(self):
        sigma, h = 0.5, 0.25
        x = np.array([0.0, 1.0, -1.0])
        expected = -(1.0 + 4.0) / (2.0 * sigma ** 2 * h * 2.0)
        assert log_prior_1d(x, PriorModel("gaussian", sigma, h=h)) == pytest.approx(expected)

    def test_zero_boundary_adds_first_increment(self):
        x = np.array([2.0, 2.0, 5.0])
        free = log_prior_1d(x, PriorModel("tv", 1.0))
        zero = log_prior_1d(x, PriorModel("tv", 1.0, boundary="zero"))
        assert free == -3.0 and zero == -5.0

    def test_too_short(self):
        with pytest.raises(DimensionError):
            log_prior_1d(np.array([1.0]), PriorModel("cauchy", 1.0))


class TestLogPrior2D:
    def test_constant_lattice_unit_scale(self):
        lat = Lattice2D.from_image(np.full((4, 5), -1.5))
        assert log_prior_2d(lat, PriorModel("cauchy", 1.0)) == 0.0

    def test_tv_corner_jump(self):
        img = np.array([[0.0, 0.0], [0.0, 1.0]])
        assert log_prior_2d(img, PriorModel("tv", 1.0)) == -2.0

    @pytest.mark.parametrize("boundary", ["free", "zero"])
    def test_single_row_equals_1d(self, boundary):
        x = np.random.default_rng(0).normal(size=9)
        for fam in ("cauchy", "gaussian", "tv"):
            prior = PriorModel(fam, 0.7, boundary=boundary)
            assert log_prior_2d(x[None, :], prior) == pytest.approx(log_prior_1d(x, prior), rel=1e-14)

    def test_two_by_one(self):
        x = np.array([0.3, -1.2])
        prior = PriorModel("cauchy", 1.3, h=0.5, h_prime=0.5)
        assert log_prior_2d(x[None, :], prior) == pytest.approx(log_prior_1d(x, prior))

    def test_matches_explicit_loop(self):
        rng = np.random.default_rng(1)
        img = rng.normal(size=(5, 7))
        prior = PriorModel("cauchy", 0.8, h=0.2, h_prime=0.5, boundary="zero")
        expected = oracles.cauchy_log_prior_sum(img, 5, 7, 0.8 * 0.2, 0.8 * 0.5, "zero")
        assert log_prior_2d(img, prior) == pytest.approx(expected, rel=1e-13)

    @pytest.mark.parametrize("family", ["cauchy", "gaussian", "tv"])
    def test_translation_invariance(self, family):
        rng = np.random.default_rng(2)
        img = rng.normal(size=(6, 6))
        prior = PriorModel(family, 0.9, h=0.1, h_prime=0.3)
        assert abs(log_prior_2d(img + 7.25, prior) - log_prior_2d(img, prior)) < 1e-12

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            log_prior(np.zeros(5), (2, 3), PriorModel("tv", 1.0))


class TestScaleForDirection:
    def test_cauchy_rule(self):
        assert scale_for_direction(1.0, 3.0, 0.1, 0.37) == 3.0 * 0.1

    def test_gaussian_rule(self):
        assert scale_for_direction(2.0, 0.8, 1.0, 4.0) == 0.4

    @pytest.mark.parametrize("h, hp", [(0.5, 2.0), (0.25, 0.125), (3.0, 1.0)])
    def test_gaussian_variance_h_over_hprime(self, h, hp):
        sigma = 0.6
        s = scale_for_direction(2.0, sigma, h, hp)
        assert s * s == pytest.approx(sigma ** 2 * h / hp, rel=1e-15)

    def test_equal_steps_general_alpha(self):
        # h^(1/a) * h^(-(a-1)/a) = h^((2-a)/a)
        alpha, reg, h = 1.5, 2.0, 0.3
        assert scale_for_direction(alpha, reg, h, h) == pytest.approx(reg * h ** ((2 - alpha) / alpha))
        assert scale_for_direction(1.0, reg, h, h) == reg * h

    def test_averaging_consistency(self):
        # halving h' (pair-averaging across rows) keeps the Cauchy scale and
        # multiplies the Gaussian variance by 2
        assert scale_for_direction(1.0, 1.0, 0.2, 0.1) == scale_for_direction(1.0, 1.0, 0.2, 0.05)
        g1 = scale_for_direction(2.0, 1.0, 0.2, 0.1)
        g2 = scale_for_direction(2.0, 1.0, 0.2, 0.05)
        assert g2 ** 2 == pytest.approx(2 * g1 ** 2)

    @pytest.mark.parametrize("args", [(0.0, 1.0, 1.0, 1.0), (1.0, 0.0, 1.0, 1.0), (1.0, 1.0, 0.0, 1.0), (1.0, 1.0, 1.0, -1.0)])
    def test_domain(self, args):
        with pytest.raises(ParameterError):
            scale_for_direction(*args)


class TestDeltaLogPrior:
    def test_unchanged_value(self):
        x = np.random.default_rng(3).normal(size=(4, 4))
        assert delta_log_prior(x, 5, x.ravel()[5], PriorModel("cauchy", 1.0)) == 0.0

    def test_hand_example(self):
        x = Grid1D(3, 1.0, np.array([-2.0, 0.0, 2.0]))
        val = delta_log_prior(x, 1, 2.0, PriorModel("cauchy", 1.0))
        assert val == pytest.approx(-math.log(17) + 2 * math.log(5), abs=1e-12)
        assert val == pytest.approx(0.3857, abs=1e-4)

    def test_out_of_range(self):
        with pytest.raises(IndexError):
            delta_log_prior(np.zeros(4), 4, 1.0, PriorModel("tv", 1.0))

    @pytest.mark.parametrize("family", ["cauchy", "gaussian", "tv"])
    @pytest.mark.parametrize("boundary", ["free", "zero"])
    def test_matches_full_recompute(self, family, boundary):
        rng = np.random.default_rng(4)
        for shape, steps in (((13,), (0.1, 1.0)), ((6, 7), (0.2, 0.5)), ((1, 9), (1.0, 1.0))):
            prior = PriorModel(family, 0.7, h=steps[0], h_prime=steps[1], boundary=boundary)
            for _ in range(200):
                # moderate values keep the full-recompute oracle well conditioned
                x = 2.0 * rng.normal(size=shape)
                site = int(rng.integers(x.size))
                new = x.ravel()[site] + rng.normal() * 3.0
                y = x.copy().ravel()
                y[site] = new
                full = log_prior(y, shape, prior) - log_prior(x, shape, prior)
                fast = delta_log_prior(x, site, new, prior)
                assert abs(fast - full) <= 1e-10 * max(abs(full), 1.0)

    @settings(max_examples=60, deadline=None)
    @given(
        vals=st.lists(st.floats(-50, 50), min_size=2, max_size=12),
        site=st.integers(0, 11),
        new=st.floats(-50, 50),
        reg=st.floats(0.05, 5.0),
    )
    def test_property_1d(self, vals, site, new, reg):
        x = np.array(vals)
        site = site % x.size
        prior = PriorModel("cauchy", reg)
        y = x.copy()
        y[site] = new
        full = log_prior(y, (x.size,), prior) - log_prior(x, (x.size,), prior)
        assert delta_log_prior(x, site, new, prior) == pytest.approx(full, rel=1e-9, abs=1e-9)


class TestGradient:
    @pytest.mark.parametrize("family", ["cauchy", "gaussian"])
    @pytest.mark.parametrize("shape", [(11,), (4, 5)])
    def test_central_differences(self, family, shape):
        rng = np.random.default_rng(5)
        prior = PriorModel(family, 0.6, h=0.3, h_prime=0.7, boundary="zero")
        x = rng.normal(size=int(np.prod(shape)))
        g = log_prior_gradient(x, shape, prior)
        fd = oracles.central_gradient(lambda v: log_prior(v, shape, prior), x)
        np.testing.assert_allclose(g, fd, rtol=1e-5, atol=1e-6)

    def test_tv_has_no_gradient(self):
        with pytest.raises(ParameterError):
            log_prior_gradient(np.zeros(4), (4,), PriorModel("tv", 1.0))


class TestEdges:
    def test_degenerate_axis_has_no_edges(self):
        e = difference_edges((1, 5), PriorModel("cauchy", 1.0, boundary="zero"))
        # four interior increments plus one boundary increment, none vertical
        assert e.n_edges == 5 and np.all(e.direction == 0)

    def test_difference_matrix(self):
        prior = PriorModel("gaussian", 1.0, boundary="zero")
        e = difference_edges((3, 4), prior)
        x = np.random.default_rng(6).normal(size=12)
        np.testing.assert_allclose(e.matrix() @ x, e.differences(x))
        H, V = oracles.difference_rows(3, 4, "zero")
        assert e.n_edges == H.shape[0] + V.shape[0]

    def test_too_small(self):
        with pytest.raises(DimensionError):
            difference_edges((1,), PriorModel("tv", 1.0))


class TestModality:
    def test_density_values(self):
        assert conditional_site_density(0.0, 0.0) == 1.0
        assert conditional_site_density(1.0, 0.0) == 0.25
        assert conditional_site_density(2.0, 0.0) == pytest.approx(0.04)
        at_mode = conditional_site_density(2.0, math.sqrt(3))
        assert at_mode == pytest.approx(0.0625, abs=1e-4)
        assert at_mode > conditional_site_density(2.0, 0.0)

    @pytest.mark.parametrize("a", [0.0, 0.5, 0.99])
    def test_unimodal(self, a):
        r = analyze_modality(a)
        assert r.classification == "unimodal" and r.modes == (0.0,)
        assert r.second_derivative_at_zero < 0

    def test_flat(self):
        r = analyze_modality(1.0)
        assert r.classification == "flat"
        assert abs(r.second_derivative_at_zero) < 1e-12

    @pytest.mark.parametrize("a", [1.01, 1.5, 2.0, 5.0, -2.0])
    def test_bimodal(self, a):
        r = analyze_modality(a)
        assert r.classification == "bimodal" and r.second_derivative_at_zero > 0
        m = math.sqrt(a * a - 1)
        assert r.modes == pytest.approx((-m, m))

    def test_modes_for_a_2(self):
        assert analyze_modality(2.0).modes[1] == pytest.approx(1.73205, abs=1e-5)

    @pytest.mark.parametrize("a", [0.5, 1.0, 1.5, 2.0, 5.0])
    def test_grid_argmax(self, a):
        x = np.linspace(-10, 10, 2_000_001)
        d = conditional_site_density(a, x)
        # the density is symmetric; compare the right-hand maximizer
        right = x >= 0
        best = x[right][np.argmax(d[right])]
        assert abs(best - analyze_modality(a).modes[-1]) < 1e-4 + 1e-5

    @pytest.mark.parametrize("a", [0.3, 0.9, 1.2, 3.0])
    def test_curvature_by_finite_differences(self, a):
        h = 1e-4
        fd = (conditional_site_density(a, h) - 2 * conditional_site_density(a, 0.0) + conditional_site_density(a, -h)) / h ** 2
        assert analyze_modality(a).second_derivative_at_zero == pytest.approx(fd, rel=1e-5)
