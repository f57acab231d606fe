import math

import numpy as np
import pytest
from scipy import optimize

from fbc_noma.models.fbc import FbcParams
from fbc_noma.utils.fbc import (LN2, MONOTONICITY_BOUND, FbcDomainError, UnboundedSinrError, blocklength_for_sinr,
                                fbc_rate, fbc_residual, monotonicity_holds, q_inv, rate_point, sinr_for_blocklength,
                                sinr_table, snr_energy)


@pytest.fixture
def urllc():
    """Typical short-packet demand: 256 bits at 1e-6."""
    return FbcParams(bits=256, error_prob=1e-6)


def residual_root(m, params):
    """Independent SINR oracle: Brent's method on the residual."""
    return optimize.brentq(lambda g: fbc_residual(m, g, params), 1e-12, 1e6, xtol=1e-15, rtol=1e-15)


class TestQInv:
    """Test suite for the inverse Gaussian Q-function."""

    def test_median(self):
        """Test that Q^-1(0.5) is zero."""
        assert q_inv(0.5) == pytest.approx(0.0, abs=1e-15)

    def test_reference_values(self):
        """Test high-precision reference quantiles."""
        assert q_inv(1e-6) == pytest.approx(4.753424308822899, rel=1e-9)
        assert q_inv(1e-10) == pytest.approx(6.361340902404056, rel=1e-9)
        assert q_inv(5e-7) == pytest.approx(4.891638475698358, rel=1e-9)

    def test_out_of_domain(self):
        """Test that probabilities outside (0, 1) are rejected."""
        for eps in (0.0, 1.0, -0.1):
            with pytest.raises(FbcDomainError) as exc_info:
                q_inv(eps)
            assert "Invalid probability" in str(exc_info.value)


class TestRate:
    """Test suite for the rate formula and its residual."""

    def test_shannon_case(self):
        """Test that eps = 0.5 gives the Shannon rate."""
        for gamma in (0.1, 1.0, 7.0):
            assert fbc_rate(gamma, 300, 0.5) == pytest.approx(math.log2(1.0 + gamma))

    def test_zero_sinr(self):
        """Test that zero SINR gives zero rate."""
        assert fbc_rate(0.0, 640, 1e-6) == 0.0

    def test_shannon_dominance(self):
        """Test that the penalized rate stays below log2(1+gamma)."""
        gamma = np.logspace(-3, 3, 50)
        assert np.all(fbc_rate(gamma, 640, 1e-6) < np.log2(1.0 + gamma))

    def test_short_block_rate_can_be_negative(self):
        """Test that negative rates are returned as is."""
        assert fbc_rate(1e-4, 100, 1e-9) < 0.0

    def test_residual_shannon_zero(self):
        """Test that the residual vanishes at 2^(N/m) - 1 for eps = 0.5."""
        params = FbcParams(bits=300, error_prob=0.5)
        assert fbc_residual(200, 2.0 ** 1.5 - 1.0, params) == pytest.approx(0.0, abs=1e-9)

    def test_residual_increasing_in_sinr(self, urllc):
        """Test that the residual increases with the SINR at fixed blocklength."""
        gamma = np.linspace(0.01, 20.0, 400)
        assert np.all(np.diff(fbc_residual(640, gamma, urllc)) > 0.0)

    def test_rejects_negative_sinr(self):
        """Test that a negative SINR is rejected."""
        with pytest.raises(FbcDomainError):
            fbc_rate(-0.1, 100, 1e-3)


class TestBlocklength:
    """Test suite for the closed-form blocklength."""

    def test_shannon_case(self):
        """Test m = N/log2(1+gamma) for eps = 0.5."""
        assert blocklength_for_sinr(1.0, FbcParams(bits=640, error_prob=0.5)) == pytest.approx(640.0)

    def test_solves_residual(self, urllc):
        """Test that the returned blocklength zeroes the residual."""
        for gamma in (0.05, 0.5, 3.0, 40.0):
            m = blocklength_for_sinr(gamma, urllc)
            assert fbc_residual(m, gamma, urllc) == pytest.approx(0.0, abs=1e-9 * urllc.bits * LN2 * 10)

    def test_zero_sinr_rejected(self, urllc):
        """Test that gamma = 0 has no blocklength."""
        with pytest.raises(FbcDomainError) as exc_info:
            blocklength_for_sinr(0.0, urllc)
        assert "must be positive" in str(exc_info.value)

    def test_round_trip(self, urllc):
        """Test gamma -> m -> gamma round trips."""
        for gamma in (0.01, 0.1, 1.0, 10.0, 100.0, 1000.0):
            m = blocklength_for_sinr(gamma, urllc)
            if m < urllc.min_blocklength:
                continue
            assert sinr_for_blocklength(m, urllc, tol=1e-12) == pytest.approx(gamma, rel=1e-6)


class TestSinr:
    """Test suite for the implicit SINR function."""

    def test_shannon_case(self):
        """Test that 640 bits in 640 symbols need SINR 1 without dispersion."""
        assert sinr_for_blocklength(640, FbcParams(bits=640, error_prob=0.5)) == pytest.approx(1.0, abs=1e-8)

    def test_matches_brent_oracle(self, urllc):
        """Test the bisection against an independent root finder."""
        gamma = sinr_for_blocklength(640, urllc, tol=1e-12)
        assert gamma == pytest.approx(residual_root(640, urllc), abs=1e-10)
        assert fbc_residual(640, gamma, urllc) == pytest.approx(0.0, abs=1e-8 * urllc.bits * LN2)

    def test_residual_certificate_random(self):
        """Test the residual certificate and round trip on random demands."""
        rng = np.random.default_rng(7)
        for _ in range(100):
            params = FbcParams(bits=int(rng.integers(32, 2049)), error_prob=float(10 ** rng.uniform(-9, -3)))
            m = float(rng.integers(100, 5001))
            gamma = sinr_for_blocklength(m, params, tol=1e-12)
            assert abs(fbc_residual(m, gamma, params)) <= 1e-8 * params.bits * LN2
            assert blocklength_for_sinr(gamma, params) == pytest.approx(m, rel=1e-6)

    def test_decreasing_in_blocklength(self, urllc):
        """Test that Gamma(m) decreases on an integer grid."""
        gamma = sinr_for_blocklength(np.arange(100, 10001), urllc, tol=1e-13)
        assert np.all(np.diff(gamma) < 0.0)

    def test_increasing_in_bits(self):
        """Test that Gamma increases with the bit load at fixed blocklength."""
        gamma = sinr_table(np.arange(1, 400), 640, 1e-6, tol=1e-12)
        assert np.all(np.diff(gamma) > 0.0)

    def test_scalar_and_array_agree(self, urllc):
        """Test that scalar and vectorized paths agree."""
        m = np.array([100, 256, 640, 3000])
        vector = sinr_for_blocklength(m, urllc)
        for i, mi in enumerate(m):
            assert sinr_for_blocklength(int(mi), urllc) == pytest.approx(vector[i], abs=1e-9)

    def test_bracket_cap(self, urllc):
        """Test that a cap below the needed SINR is reported as unbounded."""
        gamma = sinr_for_blocklength(256, urllc)
        with pytest.raises(UnboundedSinrError):
            sinr_for_blocklength(256, urllc, upper=gamma / 2.0)
        assert sinr_for_blocklength(256, urllc, upper=gamma * 2.0) == pytest.approx(gamma, abs=2e-9)

    def test_table_marks_unreachable_entries(self, urllc):
        """Test that table entries above the cap are NaN and zero loads are zero."""
        table = sinr_table(np.array([[0], [256], [2560]]), np.array([100, 640]), 1e-6, upper=100.0)
        assert table.shape == (3, 2)
        assert np.all(table[0] == 0.0)
        assert np.all(np.isfinite(table[1]))
        assert np.isnan(table[2, 0])

    def test_below_minimum_blocklength(self, urllc):
        """Test that blocklengths below the minimum are rejected."""
        with pytest.raises(FbcDomainError) as exc_info:
            sinr_for_blocklength(99, urllc)
        assert "below the minimum" in str(exc_info.value)

    def test_invalid_tolerance(self, urllc):
        """Test that a nonpositive tolerance is rejected."""
        with pytest.raises(FbcDomainError):
            sinr_for_blocklength(640, urllc, tol=0.0)

    def test_rate_point(self, urllc):
        """Test the solved rate point."""
        point = rate_point(640, urllc)
        assert point.rate == pytest.approx(0.4)
        assert point.sinr == pytest.approx(sinr_for_blocklength(640, urllc))


class TestEnergyMonotonicity:
    """Test suite for the energy monotonicity condition."""

    def test_bound_constant(self):
        """Test the monotonicity bound 2 sqrt(ln 2)/(4 - sqrt 2)."""
        assert MONOTONICITY_BOUND == pytest.approx(0.64394, abs=1e-5)

    def test_typical_demands(self):
        """Test demands on both sides of the bound."""
        assert monotonicity_holds(FbcParams(bits=256, error_prob=1e-6))
        assert monotonicity_holds(FbcParams(bits=100, error_prob=1e-10))
        assert not monotonicity_holds(FbcParams(bits=25, error_prob=1e-10))

    def test_shannon_energy(self):
        """Test E(m) = m for 640 bits at rate 1."""
        assert snr_energy(640, FbcParams(bits=640, error_prob=0.5)) == pytest.approx(640.0, rel=1e-8)

    @pytest.mark.parametrize("count", [10, pytest.param(100, marks=pytest.mark.slow)])
    def test_energy_decreasing(self, count):
        """Test that m*Gamma(m) strictly decreases when the condition holds."""
        rng = np.random.default_rng(11)
        m = np.arange(100, 10001)
        checked = 0
        while checked < count:
            params = FbcParams(bits=int(rng.integers(32, 2049)), error_prob=float(10 ** rng.uniform(-9, -3)))
            if not monotonicity_holds(params):
                continue
            energy = m * sinr_for_blocklength(m, params, tol=1e-13)
            assert np.all(np.diff(energy) < 0.0), params
            checked += 1
