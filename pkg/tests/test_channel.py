import numpy as np
import pytest

from greencran import (ChannelParams, ChannelState, NetworkInstance, PowerModel,
                       channel_power_gain, channel_power_gains, generate_channel,
                       generate_scenario, path_loss_db)


class TestPathLoss:
    def test_intercept_at_one_km(self):
        assert path_loss_db(1.0) == pytest.approx(148.1)

    def test_decade_down(self):
        assert path_loss_db(0.1) == pytest.approx(110.5)

    def test_decade_up(self):
        assert path_loss_db(10.0) == pytest.approx(185.7)

    def test_doubling_distance(self):
        delta = path_loss_db(2.0) - path_loss_db(1.0)
        assert delta == pytest.approx(37.6 * np.log10(2.0), rel=1e-12)

    def test_nonpositive_distance_rejected(self):
        with pytest.raises(ValueError):
            path_loss_db(0.0)
        with pytest.raises(ValueError):
            path_loss_db(np.array([1.0, -2.0]))


class TestScenario:
    def test_deterministic_given_seed(self):
        a = generate_scenario(1000.0, 10, 15, 2, 42)
        b = generate_scenario(1000.0, 10, 15, 2, 42)
        assert a.rrh_positions.tobytes() == b.rrh_positions.tobytes()
        assert a.user_positions.tobytes() == b.user_positions.tobytes()

    def test_uniform_means(self):
        # empirical mean of each coordinate within 3 standard errors of 0
        n = 10_000
        region = 1000.0
        inst = generate_scenario(region, 1, n, 1, 123)
        se = region / np.sqrt(3.0) / np.sqrt(n)
        assert np.all(np.abs(inst.user_positions.mean(axis=0)) < 3 * se)

    def test_reference_setup_shape(self):
        inst = generate_scenario(1000.0, 10, 15, 2, 7)
        assert inst.num_rrh == 10 and inst.num_users == 15
        assert np.all(inst.antennas == 2)
        assert np.all(np.abs(inst.rrh_positions) <= 1000.0)

    def test_user_prefix_nested_across_counts(self):
        # same seed, larger K extends the smaller draw
        small = generate_scenario(500.0, 3, 5, 2, 9)
        large = generate_scenario(500.0, 3, 10, 2, 9)
        assert np.array_equal(small.user_positions, large.user_positions[:5])


class TestChannel:
    def test_deterministic_bits(self):
        inst = generate_scenario(800.0, 4, 3, 2, 11)
        c1 = generate_channel(inst, ChannelParams(), 77)
        c2 = generate_channel(inst, ChannelParams(), 77)
        for b1, b2 in zip(c1.blocks, c2.blocks):
            assert b1.tobytes() == b2.tobytes()

    def test_degenerate_channel_norm(self):
        # no shadowing, no fading: ||h_kl||^2 = N * 10^(-PL/10) * gain exactly
        model = PowerModel.uniform(2)
        inst = NetworkInstance(antennas=[2, 2],
                               rrh_positions=[[0.0, 0.0], [300.0, 0.0]],
                               user_positions=[[100.0, 0.0]],
                               region=1000.0, power=model)
        params = ChannelParams(shadowing_sigma_db=0.0, fading=False)
        chan = generate_channel(inst, params, 5)
        gain = 10.0 ** 0.9
        for l, d_m in enumerate([100.0, 200.0]):
            expected = 2 * 10.0 ** (-path_loss_db(d_m / 1000.0) / 10.0) * gain
            assert np.sum(np.abs(chan.blocks[l][0]) ** 2) == pytest.approx(
                expected, rel=1e-12)

    def test_mean_power_matches_lognormal_moment(self):
        # users all at exactly 1 km; E|h|^2 = 10^(-14.81) * 10^0.9 * E[s]
        n = 100_000
        model = PowerModel.uniform(1)
        inst = NetworkInstance(antennas=[1],
                               rrh_positions=[[0.0, 0.0]],
                               user_positions=np.tile([1000.0, 0.0], (n, 1)),
                               region=1000.0, power=model)
        chan = generate_channel(inst, ChannelParams(), 2024)
        sigma_db = 8.0
        mean_shadow = np.exp((sigma_db * np.log(10.0) / 10.0) ** 2 / 2.0)
        expected = 10.0 ** (-14.81) * 10.0 ** 0.9 * mean_shadow
        observed = np.mean(np.abs(chan.blocks[0][:, 0]) ** 2)
        assert observed == pytest.approx(expected, rel=0.05)

    def test_noise_floor_conversion(self):
        from greencran import dbm_to_watts
        assert dbm_to_watts(-102.0) == pytest.approx(10.0 ** -13.2, rel=1e-12)

    def test_entries_finite_and_shapes(self):
        inst = generate_scenario(600.0, 3, 4, [1, 2, 3], 13)
        chan = generate_channel(inst, ChannelParams(), 14)
        assert chan.antennas == (1, 2, 3)
        assert chan.num_users == 4
        assert np.isfinite(chan.aggregate(0)).all()


class TestChannelParams:
    def test_slope_must_be_positive(self):
        with pytest.raises(ValueError):
            ChannelParams(pathloss_slope_db=0.0)

    def test_shadowing_sigma_nonnegative(self):
        with pytest.raises(ValueError):
            ChannelParams(shadowing_sigma_db=-1.0)


class TestChannelPowerGain:
    def test_zero_channel(self):
        chan = ChannelState((np.zeros((2, 2), dtype=complex),))
        assert channel_power_gain(chan, 0) == 0.0

    def test_direct_arithmetic(self):
        chan = ChannelState((np.array([[1.0, 2.0j]]),))
        assert channel_power_gain(chan, 0) == pytest.approx(5.0)

    def test_phase_invariance(self):
        rng = np.random.default_rng(15)
        block = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
        chan = ChannelState((block,))
        rotated = ChannelState((block * np.exp(1j * 0.7),))
        assert channel_power_gain(rotated, 0) == pytest.approx(
            channel_power_gain(chan, 0), rel=1e-12)

    def test_gains_vector(self):
        rng = np.random.default_rng(16)
        blocks = tuple(rng.standard_normal((2, 2)) + 0j for _ in range(3))
        chan = ChannelState(blocks)
        gains = channel_power_gains(chan)
        assert gains.shape == (3,)
        assert gains[1] == pytest.approx(channel_power_gain(chan, 1))
