import math

import numpy as np
import pytest
from pydantic import ValidationError

from fbc_noma.models.scenario import ScenarioParams, UserSpec
from fbc_noma.models.simulation import (ChannelCondition, ChannelModel, ExperimentConfig, InfeasibilityRow, Scheme,
                                        SweepAxis)
from fbc_noma.services import (MonteCarloHarness, NomaSolver, apply_sweep, channel_stream, sample_channel,
                               sample_channels, shannon_baseline)
from fbc_noma.services.simulation import condition_mask


def scenario(bits=(256, 256), deadlines=(256, 640), max_power="40dBm"):
    return ScenarioParams(user1=UserSpec(bits=bits[0], deadline=deadlines[0], error_prob=1e-6, gain=1.0),
                          user2=UserSpec(bits=bits[1], deadline=deadlines[1], error_prob=1e-6, gain=1.0),
                          max_power=max_power)


def experiment(**kwargs):
    defaults = dict(schemes=[Scheme.NOMA, Scheme.TDMA], axis=SweepAxis.D1, values=[256, 640],
                    realizations=20, block_size=10, seed=5)
    defaults.update(kwargs)
    return ExperimentConfig(**defaults)


class TestChannels:
    """Test suite for the channel sampler."""

    def test_mean_gain(self):
        """Test the normalized mean gain of the default model."""
        assert ChannelModel().mean_gain == pytest.approx(1e9)

    def test_noise_power_units(self):
        """Test that the noise power accepts dBm."""
        assert ChannelModel(noise_power="-110dBm").noise_power == pytest.approx(1e-14)

    def test_zero_variance(self):
        """Test that a zero fading variance gives the mean gain."""
        h1, h2 = sample_channels(ChannelModel(fading_variance=0.0), channel_stream(0, 0), 5)
        assert np.allclose(h1, 1e9)
        assert np.allclose(h2, 1e9)

    def test_unit_mean_fade(self):
        """Test that the fade power has unit mean."""
        model = ChannelModel()
        h1, h2 = sample_channels(model, channel_stream(1, 0), 100000)
        assert np.mean(h1) / model.mean_gain == pytest.approx(1.0, abs=0.02)
        assert np.mean(h2) / model.mean_gain == pytest.approx(1.0, abs=0.02)

    def test_streams(self):
        """Test that a stream depends only on the seed and block."""
        model = ChannelModel()
        first = sample_channels(model, channel_stream(3, 2), 10)
        again = sample_channels(model, channel_stream(3, 2), 10)
        other = sample_channels(model, channel_stream(3, 1), 10)
        assert np.array_equal(first[0], again[0])
        assert not np.array_equal(first[0], other[0])

    def test_single_draw(self):
        """Test the scalar sampler."""
        h1, h2 = sample_channel(ChannelModel(), channel_stream(0, 0))
        assert isinstance(h1, float)
        assert h1 > 0.0 and h2 > 0.0

    def test_condition_partition(self):
        """Test that the two channel conditions split the draws."""
        h1, h2 = sample_channels(ChannelModel(), channel_stream(4, 0), 1000)
        weak = condition_mask(ChannelCondition.WEAK_FIRST, h1, h2)
        strong = condition_mask(ChannelCondition.STRONG_FIRST, h1, h2)
        assert not np.any(weak & strong)
        assert np.all(weak | strong)
        assert np.all(condition_mask(ChannelCondition.ALL, h1, h2))


class TestSweep:
    """Test suite for sweep points."""

    def test_deadline(self):
        """Test the D1 axis."""
        assert apply_sweep(scenario(), SweepAxis.D1, 384).user1.deadline == 384

    def test_max_power_in_dbm(self):
        """Test that max_power values are dBm."""
        assert apply_sweep(scenario(), SweepAxis.MAX_POWER, 30).max_power == pytest.approx(1.0)

    def test_packets(self):
        """Test that aggregated packets multiply both payloads."""
        params = apply_sweep(scenario(), SweepAxis.PACKETS, 3)
        assert (params.user1.bits, params.user2.bits) == (768, 768)

    def test_invalid_point(self):
        """Test that a D1 above D2 is rejected."""
        with pytest.raises(ValidationError):
            apply_sweep(scenario(), SweepAxis.D1, 700)

    def test_shannon_below_fbc(self):
        """Test that the Shannon baseline underestimates the NOMA energy."""
        params = scenario().with_gains(10.0, 100.0)
        assert shannon_baseline(params).energy < NomaSolver().solve_noma(params).energy


class TestEnergySweep:
    """Test suite for the Monte-Carlo energy averages."""

    def test_deterministic(self):
        """Test that a seeded run is reproducible."""
        harness = MonteCarloHarness(scenario())
        first = harness.energy_sweep(experiment())
        second = harness.energy_sweep(experiment())
        assert first == second
        assert [row.seed for row in first.rows] == [5] * 4

    def test_parallel_matches_serial(self):
        """Test that the process pool does not change the result."""
        harness = MonteCarloHarness(scenario())
        serial = harness.energy_sweep(experiment())
        parallel = harness.energy_sweep(experiment(workers=2))
        assert parallel == serial

    def test_rows(self):
        """Test the row layout and counts."""
        table = MonteCarloHarness(scenario()).energy_sweep(experiment())
        assert [(row.value, row.scheme) for row in table.rows] == [
            (256, Scheme.NOMA), (256, Scheme.TDMA), (640, Scheme.NOMA), (640, Scheme.TDMA)]
        for row in table.rows:
            assert row.draws == 20
            assert row.feasible + row.infeasible == row.draws
        assert table.records is None

    def test_noma_energy_decreasing_in_deadline(self):
        """Test that NOMA energy falls as user 1's deadline grows."""
        config = experiment(schemes=[Scheme.NOMA], values=[256, 384, 512, 640], realizations=30,
                            condition=ChannelCondition.WEAK_FIRST)
        rows = MonteCarloHarness(scenario()).energy_sweep(config).rows
        assert all(row.infeasible == 0 for row in rows)
        energies = [row.energy for row in rows]
        assert all(a > b for a, b in zip(energies, energies[1:]))

    def test_snr_loss(self):
        """Test that the SNR loss scales every energy."""
        harness = MonteCarloHarness(scenario())
        plain = harness.energy_sweep(experiment())
        lossy = harness.energy_sweep(experiment(snr_loss_db=0.25))
        for a, b in zip(plain.rows, lossy.rows):
            assert b.energy == pytest.approx(a.energy * 10.0 ** 0.025, rel=1e-12)

    def test_records(self):
        """Test per-realization records."""
        table = MonteCarloHarness(scenario()).energy_sweep(experiment(keep_records=True))
        assert len(table.records) == 2 * 2 * 20
        assert {record.index for record in table.records} == set(range(20))

    def test_shannon_below_fbc_per_draw(self):
        """Test that the Shannon baseline underestimates NOMA on every feasible draw at 35 dBm."""
        config = experiment(schemes=[Scheme.NOMA, Scheme.SHANNON_NOMA], realizations=300, block_size=100,
                            keep_records=True)
        table = MonteCarloHarness(scenario(max_power="35dBm")).energy_sweep(config)
        energies = {(r.value, r.index, r.scheme): r.energy for r in table.records if r.feasible}
        pairs = [(energy, energies[(value, index, Scheme.SHANNON_NOMA)])
                 for (value, index, scheme), energy in energies.items() if scheme == Scheme.NOMA]
        assert len(pairs) >= 590
        for fbc, shannon in pairs:
            assert shannon < fbc

    def test_infeasible_draws_excluded(self):
        """Test that a zero budget gives no mean and counts every draw."""
        row = MonteCarloHarness(scenario(max_power=0.0)).energy_sweep(experiment(values=[256])).rows[0]
        assert math.isnan(row.energy)
        assert row.infeasible == 20
        assert row.feasible_fraction == 0.0


class TestInfeasibility:
    """Test suite for the infeasibility estimator."""

    def test_decreasing_in_power(self):
        """Test that more power never adds infeasible draws."""
        config = experiment(axis=SweepAxis.MAX_POWER, values=[-65, -60, -55, -50], realizations=400, block_size=100)
        rows = MonteCarloHarness(scenario()).estimate_infeasibility(config)
        for scheme in (Scheme.NOMA, Scheme.TDMA):
            probs = [row.probability for row in rows if row.scheme == scheme]
            assert all(a >= b for a, b in zip(probs, probs[1:]))
            assert probs[0] > probs[-1]

    def test_decreasing_in_deadline(self):
        """Test that a looser D1 never adds infeasible draws."""
        config = experiment(values=[256, 384, 640], realizations=400, block_size=100)
        rows = MonteCarloHarness(scenario(max_power="-58dBm")).estimate_infeasibility(config)
        for scheme in (Scheme.NOMA, Scheme.TDMA):
            counts = [row.infeasible for row in rows if row.scheme == scheme]
            assert all(a >= b for a, b in zip(counts, counts[1:]))

    def test_matches_energy_sweep(self):
        """Test that the vectorized counts agree with per-draw solves."""
        config = experiment(axis=SweepAxis.MAX_POWER, values=[-60, -55], realizations=40)
        harness = MonteCarloHarness(scenario())
        estimated = harness.estimate_infeasibility(config)
        solved = harness.energy_sweep(config).rows
        assert [row.infeasible for row in estimated] == [row.infeasible for row in solved]

    def test_hybrid_never_worse(self):
        """Test that the hybrid scheme is infeasible at most where both endpoints are."""
        config = experiment(schemes=[Scheme.NOMA, Scheme.TDMA, Scheme.HYBRID], axis=SweepAxis.MAX_POWER,
                            values=[-62, -58], realizations=60, block_size=60)
        rows = MonteCarloHarness(scenario(bits=(64, 64), deadlines=(200, 400))).estimate_infeasibility(config)
        for value in (-62, -58):
            counts = {row.scheme: row.infeasible for row in rows if row.value == value}
            assert counts[Scheme.HYBRID] <= min(counts[Scheme.NOMA], counts[Scheme.TDMA])

    def test_rare_at_operating_power(self):
        """Test that infeasibility stays in the 1e-6 range between 30 and 40 dBm."""
        config = experiment(schemes=[Scheme.NOMA, Scheme.TDMA, Scheme.HYBRID], axis=SweepAxis.MAX_POWER,
                            values=[30, 35, 40], realizations=200000, block_size=10000)
        rows = MonteCarloHarness(scenario()).estimate_infeasibility(config)
        assert len(rows) == 9
        for row in rows:
            assert row.draws == 200000
            assert row.probability < 4e-6 + 3.0 * row.std_error
        for scheme in config.schemes:
            counts = [row.infeasible for row in rows if row.scheme == scheme]
            assert all(a >= b for a, b in zip(counts, counts[1:]))

    def test_rare_across_deadlines(self):
        """Test that infeasibility at 30 dBm stays rare and never grows with D1."""
        config = experiment(values=[256, 384, 640], realizations=200000, block_size=10000)
        rows = MonteCarloHarness(scenario(max_power="30dBm")).estimate_infeasibility(config)
        for row in rows:
            assert row.probability < 4e-6 + 3.0 * row.std_error
        for scheme in config.schemes:
            counts = [row.infeasible for row in rows if row.scheme == scheme]
            assert all(a >= b for a, b in zip(counts, counts[1:]))

    def test_conditioned_draws(self):
        """Test that conditioned draw counts add up to the realizations."""
        harness = MonteCarloHarness(scenario(max_power="-58dBm"))
        weak = harness.estimate_infeasibility(experiment(values=[256], condition=ChannelCondition.WEAK_FIRST))
        strong = harness.estimate_infeasibility(experiment(values=[256], condition=ChannelCondition.STRONG_FIRST))
        assert weak[0].draws + strong[0].draws == 20

    def test_standard_error(self):
        """Test the binomial standard error and the empty case."""
        row = InfeasibilityRow.from_counts(1.0, Scheme.NOMA, 25, 100, 0)
        assert row.probability == 0.25
        assert row.std_error == pytest.approx(math.sqrt(0.25 * 0.75 / 100))
        assert math.isnan(InfeasibilityRow.from_counts(1.0, Scheme.NOMA, 0, 0, 0).probability)
