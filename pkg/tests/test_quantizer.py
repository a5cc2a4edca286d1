import math

import numpy as np
import pytest

from itq3.errors import DomainError
from itq3.quantizer import (
    DEFAULT_SCALE_COEFF,
    EPSILON_D,
    BlockStats,
    ScalePolicy,
    TernaryGrid,
    argmin_scale_coeff,
    block_stats,
    optimal_scale,
    ternary_dequantize,
    ternary_mse,
    ternary_quantize,
    uniform_quantize,
)


class TestBlockStats:
    def test_constant_block(self):
        s = block_stats([1.0, 1.0, 1.0, 1.0])
        assert s.n == 4
        assert s.mean == 1.0
        assert s.sigma == 0.0
        assert s.excess_kurtosis == 0.0

    def test_sign_pair(self):
        s = block_stats([1.0, -1.0])
        assert s.mean == 0.0
        assert s.sigma == 1.0
        assert s.l1 == 2.0
        assert s.linf == 1.0

    def test_population_sigma_of_normal_samples(self):
        rng = np.random.default_rng(0)
        s = block_stats(rng.standard_normal(10**6))
        assert 0.997 <= s.sigma <= 1.003
        assert abs(s.excess_kurtosis) < 0.02

    def test_l1_dominates_linf(self):
        rng = np.random.default_rng(1)
        s = block_stats(rng.laplace(size=256))
        assert s.l1 >= s.linf >= 0.0

    def test_empty_rejected(self):
        with pytest.raises(DomainError):
            block_stats([])

    def test_non_finite_rejected(self):
        with pytest.raises(DomainError):
            block_stats([1.0, np.inf])


class TestTernaryMse:
    def test_large_threshold_limit(self):
        # everything falls in the dead zone, so the error is the variance
        assert 0.9999 <= ternary_mse(8.0, 1.0) <= 1.0

    def test_small_threshold_limit(self):
        assert ternary_mse(1e-6, 1.0) == pytest.approx(1.0, abs=1e-4)

    def test_sigma_scaling(self):
        # mse(c*alpha, c*sigma) = c^2 * mse(alpha, sigma)
        base = ternary_mse(0.8, 1.0)
        assert ternary_mse(1.6, 2.0) == pytest.approx(4.0 * base, rel=1e-9)

    def test_unique_interior_minimum(self):
        alphas = np.arange(1, 101) * 0.02
        values = np.array([ternary_mse(float(a), 1.0) for a in alphas])
        d = np.diff(values)
        sign_changes = np.sum(np.diff(np.sign(d)) != 0)
        assert sign_changes == 1
        assert 0 < np.argmin(values) < len(values) - 1

    def test_monte_carlo_agreement(self):
        rng = np.random.default_rng(8)
        x = rng.standard_normal(10**6)
        for alpha in (0.6, 0.878, 1.2):
            recon = np.where(np.abs(x) > alpha, alpha * np.sign(x), 0.0)
            empirical = float(np.mean((x - recon) ** 2))
            assert empirical == pytest.approx(ternary_mse(alpha, 1.0), abs=3e-3)

    def test_invalid_inputs(self):
        with pytest.raises(DomainError):
            ternary_mse(0.0, 1.0)
        with pytest.raises(DomainError):
            ternary_mse(1.0, -1.0)
        with pytest.raises(DomainError):
            ternary_mse(math.inf, 1.0)


class TestScalePolicies:
    def test_default_constant(self):
        stats = block_stats([1.0, -1.0])
        assert optimal_scale(stats, ScalePolicy()) == pytest.approx(DEFAULT_SCALE_COEFF)

    def test_degenerate_block_floor(self):
        stats = block_stats([2.0, 2.0, 2.0])
        assert optimal_scale(stats, ScalePolicy()) == EPSILON_D

    def test_argmin_coefficient(self):
        # the grid minimizer sits well above the constant-policy default
        t = argmin_scale_coeff()
        assert t == pytest.approx(0.878, abs=1e-12)
        assert ternary_mse(t, 1.0) < ternary_mse(DEFAULT_SCALE_COEFF, 1.0)

    def test_argmin_policy_uses_coefficient(self):
        stats = block_stats([1.0, -1.0])
        assert optimal_scale(stats, ScalePolicy(kind="argmin")) == pytest.approx(argmin_scale_coeff())

    def test_mean_abs_policy(self):
        stats = BlockStats(n=8, mean=0.0, sigma=1.2, l1=12.0, linf=3.0, excess_kurtosis=0.0)
        assert optimal_scale(stats, ScalePolicy(kind="mean-abs")) == pytest.approx(1.0)

    @pytest.mark.parametrize("kind", ["constant", "argmin", "mean-abs"])
    def test_scale_equivariance(self, kind):
        rng = np.random.default_rng(3)
        v = rng.normal(size=64)
        policy = ScalePolicy(kind=kind)
        d1 = optimal_scale(block_stats(v), policy)
        d2 = optimal_scale(block_stats(2.5 * v), policy)
        assert d2 == pytest.approx(2.5 * d1, rel=1e-12)

    def test_policy_validation(self):
        with pytest.raises(DomainError):
            ScalePolicy(kind="median")
        with pytest.raises(DomainError):
            ScalePolicy(constant=0.0)


class TestTernaryCodes:
    def test_below_half_step(self):
        assert ternary_quantize(0.3, TernaryGrid(d=1.0)) == 0

    def test_above_half_step(self):
        assert ternary_quantize(0.6, TernaryGrid(d=1.0)) == 1

    def test_clamp(self):
        assert ternary_quantize(-2.7, TernaryGrid(d=1.0)) == -1
        assert ternary_quantize(100.0, TernaryGrid(d=1.0)) == 1

    def test_half_rounds_away_from_zero(self):
        g = TernaryGrid(d=1.0)
        assert ternary_quantize(0.5, g) == 1
        assert ternary_quantize(-0.5, g) == -1

    def test_array_codes_are_int8(self):
        codes = ternary_quantize(np.array([-0.9, 0.1, 0.9]), TernaryGrid(d=1.0))
        assert codes.dtype == np.int8
        np.testing.assert_array_equal(codes, [-1, 0, 1])

    def test_zero_point_shifts_codes(self):
        g = TernaryGrid(d=1.0, z=1)
        assert ternary_quantize(0.0, g) == 1
        assert ternary_dequantize(1, g) == 0.0
        assert ternary_dequantize(0, g) == -1.0

    def test_dequantize_values(self):
        g = TernaryGrid(d=0.5)
        assert ternary_dequantize(1, g) == 0.5
        assert ternary_dequantize(0, g) == 0.0
        assert ternary_dequantize(-1, g) == -0.5

    def test_round_trip_error_bound(self):
        # |recon - x| <= d/2 across the representable range |x| <= 1.5 d
        g = TernaryGrid(d=0.7)
        x = np.linspace(-1.5 * g.d, 1.5 * g.d, 4001)
        recon = ternary_dequantize(ternary_quantize(x, g), g)
        assert np.max(np.abs(recon - x)) <= g.d / 2 + 1e-12

    def test_invalid_code_rejected(self):
        with pytest.raises(DomainError):
            ternary_dequantize(2, TernaryGrid(d=1.0))
        with pytest.raises(DomainError):
            ternary_dequantize(np.array([0, -3]), TernaryGrid(d=1.0))

    def test_non_finite_rejected(self):
        with pytest.raises(DomainError):
            ternary_quantize(np.nan, TernaryGrid(d=1.0))

    def test_grid_validation(self):
        with pytest.raises(DomainError):
            TernaryGrid(d=0.0)
        with pytest.raises(DomainError):
            TernaryGrid(d=1.0, z=2)


class TestUniformBaseline:
    def test_three_bit_example(self):
        assert uniform_quantize(0.15, 3, -1.0, 1.0) == pytest.approx(2.0 / 7.0)

    def test_range_endpoint_within_half_step(self):
        # the endpoint error is exactly delta/2 in reals; allow an ulp of rounding
        delta = 2.0 / 7.0
        assert abs(uniform_quantize(-1.0, 3, -1.0, 1.0) - (-1.0)) <= delta / 2 * (1 + 1e-12)

    def test_error_bound_in_range(self):
        rng = np.random.default_rng(5)
        x = rng.uniform(-1.0, 1.0, size=2000)
        out = uniform_quantize(x, 3, -1.0, 1.0)
        delta = 2.0 / 7.0
        assert np.max(np.abs(out - x)) <= delta / 2 + 1e-12

    def test_output_clamped(self):
        assert uniform_quantize(5.0, 3, -1.0, 1.0) == 1.0
        assert uniform_quantize(-5.0, 3, -1.0, 1.0) == -1.0

    def test_validation(self):
        with pytest.raises(DomainError):
            uniform_quantize(0.0, 3, 1.0, -1.0)
        with pytest.raises(DomainError):
            uniform_quantize(0.0, 1, -1.0, 1.0)
        with pytest.raises(DomainError):
            uniform_quantize(0.0, 9, -1.0, 1.0)
