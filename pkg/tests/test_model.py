"""Pathloss, amplitudes, tap covariance, and sampler behavior."""

import numpy as np
import pytest

from uwbbounds.model import (InvalidParameterError, ScenarioConfig, TapCovariance,
                             build_tap_covariance, pulse_amplitude, received_power,
                             sample_channel, sample_symbols, simulate_output)


class TestPathloss:
    def test_unit_distance(self):
        # l = 1: power is just P_tx * b
        assert received_power(1e-4, 10**-5.5, 3.3, 1.0) == pytest.approx(10**-9.5, rel=1e-12)

    def test_office_distance(self):
        # 1e-4 * 10^-5.5 * 3^-3.3
        assert received_power(1e-4, 10**-5.5, 3.3, 3.0) == pytest.approx(8.42346e-12, rel=1e-5)

    def test_far_distance(self):
        # log10 P = -9.5 - 3.3*2 = -16.1
        assert received_power(1e-4, 10**-5.5, 3.3, 100.0) == pytest.approx(10**-16.1, rel=1e-12)

    def test_monotone_in_distance(self):
        p = [received_power(1e-4, 10**-5.5, 3.3, l) for l in (1.0, 2.0, 5.0, 50.0)]
        assert all(a > b for a, b in zip(p, p[1:]))

    def test_rejects_bad_domain(self):
        with pytest.raises(InvalidParameterError):
            received_power(1e-4, 10**-5.5, 3.3, 0.0)
        with pytest.raises(InvalidParameterError):
            received_power(-1e-4, 10**-5.5, 3.3, 1.0)


class TestPulseAmplitude:
    def test_frozen_value(self):
        assert pulse_amplitude(8e-12, 0.5) == pytest.approx(4e-6, rel=1e-12)

    def test_sparser_is_larger(self):
        dense = pulse_amplitude(1e-12, 0.9)
        sparse = pulse_amplitude(1e-12, 0.1)
        assert sparse == pytest.approx(3.0 * dense, rel=1e-12)

    def test_power_roundtrip(self):
        # eta * A^2 must reconstruct the average power
        a = pulse_amplitude(7.3e-13, 0.14)
        assert 0.14 * a**2 == pytest.approx(7.3e-13, rel=1e-12)

    def test_rejects_degenerate_duty(self):
        for eta in (0.0, 1.0, -0.2):
            with pytest.raises(InvalidParameterError):
                pulse_amplitude(1e-12, eta)


class TestTapCovariance:
    def test_two_tap_profile(self):
        # weights (2, 1) scaled to trace 1 -> diag(2/3, 1/3)
        t = build_tap_covariance(2, 1.0, 2)
        np.testing.assert_allclose(t.matrix, np.diag([2.0 / 3.0, 1.0 / 3.0]), rtol=1e-14)

    def test_trace_is_captured_fraction(self):
        t = build_tap_covariance(5, 0.14, 68)
        assert t.trace == pytest.approx(0.14, rel=1e-14)

    def test_decaying_diagonal(self):
        d = np.diag(build_tap_covariance(5, 0.14, 68).matrix)
        assert all(a > b > 0.0 for a, b in zip(d, d[1:]))

    def test_factor_reconstructs(self):
        t = build_tap_covariance(5, 0.14, 68)
        np.testing.assert_allclose(t.factor @ t.factor.T, t.matrix, atol=1e-16)

    def test_rank_deficient_factor(self):
        t = TapCovariance(np.diag([1.0, 0.0, 2.0]))
        assert t.factor.shape == (3, 2)
        np.testing.assert_allclose(t.factor @ t.factor.T, t.matrix, atol=1e-14)

    def test_rejects_indefinite(self):
        with pytest.raises(InvalidParameterError):
            TapCovariance(np.diag([1.0, -0.5]))
        with pytest.raises(InvalidParameterError):
            TapCovariance(np.array([[1.0, 0.5], [0.4, 1.0]]))

    def test_rejects_short_profile(self):
        with pytest.raises(InvalidParameterError):
            build_tap_covariance(5, 0.14, 4)


class TestSamplers:
    def test_channel_covariance(self):
        t = build_tap_covariance(3, 0.5, 10)
        rng = np.random.default_rng(11)
        draws = np.stack([sample_channel(t, rng) for _ in range(40_000)])
        np.testing.assert_allclose(draws.T @ draws / draws.shape[0], t.matrix,
                                   atol=0.05 * t.trace)

    def test_zero_covariance_channel(self):
        t = TapCovariance(np.zeros((4, 4)))
        h = sample_channel(t, np.random.default_rng(0))
        np.testing.assert_array_equal(h, np.zeros(4))

    def test_symbol_rate(self):
        rng = np.random.default_rng(12)
        u = sample_symbols(0.3, 200_000, rng)
        assert set(np.unique(u)) <= {0.0, 1.0}
        assert u.mean() == pytest.approx(0.3, abs=0.01)

    def test_output_noise_free(self):
        # single always-on node, zero noise: r[n] = A h for every n
        h = np.array([[0.5, -0.25]])
        u = np.ones((1, 4))
        r = simulate_output(u, h, np.array([3.0]), 0.0, np.random.default_rng(0))
        np.testing.assert_allclose(r, np.tile(3.0 * h.T, (1, 4)), rtol=1e-14)

    def test_output_superposition(self):
        rng = np.random.default_rng(13)
        u = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])
        h = np.array([[1.0, 2.0], [-1.0, 0.5]])
        a = np.array([2.0, 3.0])
        r = simulate_output(u, h, a, 0.0, rng)
        expect = np.array([[2.0, -3.0, 2.0 - 3.0], [4.0, 1.5, 4.0 + 1.5]])
        np.testing.assert_allclose(r, expect, rtol=1e-14)

    def test_output_noise_variance(self):
        rng = np.random.default_rng(14)
        r = simulate_output(np.zeros((1, 50_000)), np.zeros((1, 2)), np.array([1.0]),
                            4.0, rng)
        assert r.var() == pytest.approx(4.0, rel=0.02)


class TestScenarioConfig:
    def test_defaults_are_consistent(self):
        cfg = ScenarioConfig()
        assert cfg.num_nodes == 2
        assert cfg.tap_covariance().trace == pytest.approx(0.14, rel=1e-14)
        a = cfg.amplitudes()
        assert a.shape == (2,)
        # interferer at 10 m is weaker than the 3 m link at equal duty cycle
        assert a[1] < a[0]

    def test_amplitude_values(self):
        cfg = ScenarioConfig()
        a1 = pulse_amplitude(received_power(1e-4, 10**-5.5, 3.3, 3.0), 0.5)
        assert cfg.amplitudes()[0] == pytest.approx(a1, rel=1e-14)

    def test_field_validation_names_field(self):
        with pytest.raises(InvalidParameterError, match="codeword_len"):
            ScenarioConfig(codeword_len=0)
        with pytest.raises(InvalidParameterError, match="duty_cycles"):
            ScenarioConfig(duty_cycles=(0.5,))
        with pytest.raises(InvalidParameterError, match="h1_mode"):
            ScenarioConfig(h1_mode="frozen")
        with pytest.raises(InvalidParameterError, match="interferer_distances_m"):
            ScenarioConfig(interferer_distances_m=())

    def test_single_node(self):
        cfg = ScenarioConfig(num_nodes=1, duty_cycles=(0.5,), interferer_distances_m=())
        assert cfg.amplitudes().shape == (1,)

    def test_frozen(self):
        cfg = ScenarioConfig()
        with pytest.raises(AttributeError):
            cfg.codeword_len = 10
