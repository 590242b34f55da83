import numpy as np
import pytest

from greencran import (Beamformer, NetworkInstance, PowerModel, QoSSpec,
                       SolveOutcome, SolveStatus, dbm_to_watts, network_power,
                       rrh_power, support_transport_power, transmit_power,
                       transport_power)

from helpers import random_beamformer


def test_unit_conversions():
    assert dbm_to_watts(-102.0) == pytest.approx(6.309573444801942e-14, rel=1e-12)
    assert dbm_to_watts(30.0) == pytest.approx(1.0)


class TestRrhPower:
    def test_sleep_value_pico(self):
        model = PowerModel.uniform(1)
        assert rrh_power(0.0, 0, model) == pytest.approx(4.3)

    def test_linear_model(self):
        # 6.8 + 1/4 = 7.05 W at 1 W output
        model = PowerModel.uniform(1)
        assert rrh_power(1.0, 0, model) == pytest.approx(7.05)

    def test_discontinuity_at_zero(self):
        model = PowerModel.uniform(1)
        assert rrh_power(1e-12, 0, model) == pytest.approx(6.8)
        assert rrh_power(0.0, 0, model) == pytest.approx(4.3)

    def test_affine_on_positive_piece(self):
        model = PowerModel.uniform(1, eta=3.5)
        delta = rrh_power(2.5, 0, model) - rrh_power(1.5, 0, model)
        assert delta == pytest.approx(1.0 / 3.5)

    def test_negative_output_rejected(self):
        model = PowerModel.uniform(1)
        with pytest.raises(ValueError):
            rrh_power(-0.1, 0, model)


class TestTransportPower:
    def test_all_links_asleep(self):
        model = PowerModel.uniform(10)
        assert transport_power([False] * 10, model) == pytest.approx(27.5)

    def test_all_links_active(self):
        model = PowerModel.uniform(10)
        assert transport_power([True] * 10, model) == pytest.approx(58.5)

    def test_olt_only(self):
        model = PowerModel.uniform(0)
        assert transport_power([], model) == pytest.approx(20.0)

    def test_flag_length_checked(self):
        model = PowerModel.uniform(3)
        with pytest.raises(ValueError):
            transport_power([True, False], model)


class TestNetworkPower:
    def test_empty_set_zero_beamformer(self):
        w = Beamformer.zeros([2, 2], 3)
        model = PowerModel.uniform(2)
        assert network_power([], w, model) == 0.0

    def test_single_active_rrh(self):
        # 1 W radiated, eta = 4, overhead (6.8+3.85)-(4.3+0.75) = 5.6 W
        model = PowerModel.uniform(1)
        w = Beamformer((np.array([[1.0 + 0j]]),))
        assert np.sum(np.abs(w.blocks[0]) ** 2) == pytest.approx(1.0)
        assert network_power([0], w, model) == pytest.approx(0.25 + 5.6)

    def test_scaling_splits_quadratic_and_constant(self):
        rng = np.random.default_rng(3)
        model = PowerModel.uniform(3, p_delta=[4.0, 5.0, 6.0])
        w = random_beamformer(rng, [2, 1, 2], 2)
        base = network_power(range(3), w, model)
        doubled = network_power(range(3), w.scaled(2.0), model)
        transmit = transmit_power(w, model)
        assert doubled - base == pytest.approx(3.0 * transmit, rel=1e-12)

    def test_nonzero_inactive_group_rejected(self):
        rng = np.random.default_rng(4)
        w = random_beamformer(rng, [2, 2], 2)
        model = PowerModel.uniform(2)
        with pytest.raises(ValueError):
            network_power([0], w, model)

    def test_monotone_under_enlarging_active_set(self):
        rng = np.random.default_rng(5)
        model = PowerModel.uniform(3)
        blocks = [rng.standard_normal((2, 2)) + 0j, np.zeros((2, 2), dtype=complex),
                  np.zeros((2, 1), dtype=complex)]
        w = Beamformer(tuple(blocks))
        p1 = network_power([0], w, model)
        p2 = network_power([0, 1], w, model)
        p3 = network_power([0, 1, 2], w, model)
        assert p1 <= p2 <= p3


class TestSupportTransportPower:
    def test_zero_beamformer(self):
        model = PowerModel.uniform(3)
        assert support_transport_power(Beamformer.zeros([2, 2, 2], 2), model) == 0.0

    def test_single_nonzero_group(self):
        model = PowerModel.uniform(4, p_delta=[5.6, 5.6, 8.0, 5.6])
        blocks = [np.zeros((1, 2), dtype=complex) for _ in range(4)]
        blocks[2] = np.ones((1, 2), dtype=complex)
        assert support_transport_power(Beamformer(tuple(blocks)), model) == pytest.approx(8.0)

    def test_full_support(self):
        rng = np.random.default_rng(6)
        p_delta = [4.0, 7.0, 9.0]
        model = PowerModel.uniform(3, p_delta=p_delta)
        w = random_beamformer(rng, [2, 2, 2], 2)
        assert support_transport_power(w, model) == pytest.approx(sum(p_delta))

    def test_matches_network_power_split(self):
        # T(w) + F(w) equals the network power whenever support == active set
        rng = np.random.default_rng(7)
        for _ in range(20):
            L = int(rng.integers(1, 5))
            antennas = [int(rng.integers(1, 3)) for _ in range(L)]
            model = PowerModel.uniform(L, p_delta=rng.uniform(1.0, 10.0, L))
            w = random_beamformer(rng, antennas, int(rng.integers(1, 4)),
                                  zero_prob=0.4)
            active = w.support()
            split = transmit_power(w, model) + support_transport_power(w, model)
            assert network_power(active, w, model) == pytest.approx(split, rel=1e-12)


class TestBeamformer:
    def test_group_partition(self):
        rng = np.random.default_rng(8)
        w = random_beamformer(rng, [2, 3, 1], 4)
        agg = w.aggregate()
        assert agg.size == 4 * (2 + 3 + 1)
        start = 0
        for l, n in enumerate([2, 3, 1]):
            group = w.group_vector(l)
            assert group.size == 4 * n
            assert np.array_equal(agg[start:start + group.size], group)
            start += group.size

    def test_group_norm_zero_iff_zero_group(self):
        w = Beamformer.zeros([2, 2], 3)
        assert np.all(w.group_norms() == 0.0)
        blocks = list(w.blocks)
        blocks[1] = np.full((3, 2), 1e-3, dtype=complex)
        w2 = Beamformer(tuple(blocks))
        assert w2.group_norms()[0] == 0.0
        assert w2.group_norms()[1] > 0.0

    def test_support_threshold_is_relative(self):
        big = np.full((1, 1), 1e3, dtype=complex)
        tiny = np.full((1, 1), 1e-5, dtype=complex)
        w = Beamformer((big, tiny))
        # 1e-5 is below 1e-6 * max(1, ||w||) once ||w|| ~ 1e3
        assert w.support() == (0,)
        w_small = Beamformer((np.full((1, 1), 1.0 + 0j), tiny))
        assert w_small.support() == (0, 1)

    def test_per_user_norms(self):
        block = np.array([[3.0, 4.0], [0.0, 0.0]], dtype=complex)
        w = Beamformer((block,))
        assert w.per_user_norms(0) == pytest.approx([5.0, 0.0])


class TestValidation:
    def test_power_model_positivity(self):
        with pytest.raises(ValueError):
            PowerModel(eta=[0.0], p_max=[1.0], p_delta=[1.0])
        with pytest.raises(ValueError):
            PowerModel(eta=[4.0], p_max=[0.0], p_delta=[1.0])
        with pytest.raises(ValueError):
            PowerModel(eta=[4.0], p_max=[1.0], p_delta=[-1.0])

    def test_power_model_component_consistency(self):
        with pytest.raises(ValueError):
            PowerModel(eta=[4.0], p_max=[1.0], p_delta=[99.0],
                       p_sleep_rrh=[4.3], p_sleep_tl=[0.75],
                       p_active_rrh=[6.8], p_active_tl=[3.85])
        with pytest.raises(ValueError):
            PowerModel(eta=[4.0], p_max=[1.0], p_delta=[5.6], p_sleep_rrh=[4.3])

    def test_components_derive_delta(self):
        model = PowerModel.from_components(
            eta=[4.0], p_max=[1.0], p_active_rrh=[6.8], p_active_tl=[3.85],
            p_sleep_rrh=[4.3], p_sleep_tl=[0.75])
        assert model.p_delta[0] == pytest.approx(5.6)

    def test_qos_positivity(self):
        with pytest.raises(ValueError):
            QoSSpec(gamma=[0.0], sigma2=[1.0])
        with pytest.raises(ValueError):
            QoSSpec(gamma=[1.0], sigma2=[0.0])

    def test_instance_positions_inside_region(self):
        model = PowerModel.uniform(1)
        with pytest.raises(ValueError):
            NetworkInstance(antennas=[2], rrh_positions=[[2000.0, 0.0]],
                            user_positions=[[0.0, 0.0]], region=1000.0,
                            power=model)

    def test_instance_power_size_match(self):
        with pytest.raises(ValueError):
            NetworkInstance(antennas=[2, 2], rrh_positions=[[0, 0], [1, 1]],
                            user_positions=[[0, 0]], region=10.0,
                            power=PowerModel.uniform(3))

    def test_outcome_power_absent_unless_optimal(self):
        with pytest.raises(ValueError):
            SolveOutcome(status=SolveStatus.INFEASIBLE, network_power=1.0)
        out = SolveOutcome(status=SolveStatus.INFEASIBLE, active_set=(0, 1))
        assert out.network_power is None

    def test_types_are_read_only(self):
        model = PowerModel.uniform(2)
        with pytest.raises(ValueError):
            model.eta[0] = 2.0
        w = Beamformer.zeros([2], 1)
        with pytest.raises(ValueError):
            w.blocks[0][0, 0] = 1.0
