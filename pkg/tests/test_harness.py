import json
import os

import numpy as np
import pytest

from greencran import (ChannelParams, ExperimentConfig, ResultRecord,
                       emit_results, generate_channel, generate_scenario,
                       load_snapshot, run_sweep, save_snapshot, summarize)
from greencran.harness import RAW_HEADER, SUMMARY_HEADER, trial_seed


def tiny_config(**overrides):
    base = dict(num_rrh=3, num_users=2, antennas=2, region_m=400.0,
                sinr_sweep_db=(0.0, 4.0), trials=2, master_seed=11,
                algorithms=("cb", "bisection"))
    base.update(overrides)
    return ExperimentConfig(**base)


class TestConfig:
    def test_unknown_keys_rejected(self):
        with pytest.raises(ValueError):
            ExperimentConfig.from_dict({"schema_version": 1, "bogus": 3})

    def test_schema_version_checked(self):
        with pytest.raises(ValueError):
            ExperimentConfig.from_dict({"schema_version": 2})

    def test_roundtrip_and_hash_stability(self):
        config = tiny_config()
        again = ExperimentConfig.from_dict(config.to_dict())
        assert again == config
        assert config.config_hash() == again.config_hash()
        assert len(config.config_hash()) == 12

    def test_file_roundtrip(self, tmp_path):
        config = tiny_config(transport_power_w=[4.0, 5.0, 6.0])
        path = tmp_path / "config.json"
        path.write_text(json.dumps(config.to_dict()))
        assert ExperimentConfig.from_file(str(path)) == config

    def test_algorithm_names_validated(self):
        with pytest.raises(ValueError):
            tiny_config(algorithms=("cb", "nonsense"))

    def test_exhaustive_gated_by_size(self):
        with pytest.raises(ValueError):
            ExperimentConfig(num_rrh=13, algorithms=("exhaustive",))

    def test_empty_sweep_rejected(self):
        with pytest.raises(ValueError):
            tiny_config(sinr_sweep_db=())

    def test_transport_list_length_checked(self):
        with pytest.raises(ValueError):
            tiny_config(transport_power_w=[1.0, 2.0])

    def test_wide_area_user_sweep_expressible(self):
        # the L=20, 20 W-overhead, user-count-sweep family used by the
        # experiment write-ups is a plain config
        config = ExperimentConfig(num_rrh=20, num_users=15, antennas=2,
                                  region_m=2000.0, transport_power_w=20.0,
                                  user_counts=(5, 10, 15, 20),
                                  sinr_target_db=4.0)
        assert config.user_counts == (5, 10, 15, 20)
        assert len(config.config_hash()) == 12
        assert config.power_model().p_delta[0] == 20.0


class TestRunSweep:
    def test_record_grid(self):
        config = tiny_config()
        records = run_sweep(config, "sinr")
        assert len(records) == 2 * 2 * 2  # points x trials x algorithms
        assert {r.sweep_var for r in records} == {"sinr_db"}
        assert {r.sweep_value for r in records} == {0.0, 4.0}
        for r in records:
            if r.status == "optimal":
                assert r.network_power is not None and r.num_active is not None
            else:
                assert r.network_power is None and r.num_active is None

    def test_adding_algorithm_leaves_others_unchanged(self):
        just_cb = run_sweep(tiny_config(algorithms=("cb",)), "sinr")
        both = run_sweep(tiny_config(algorithms=("cb", "greedy")), "sinr")
        mine = {(r.trial, r.sweep_value): r.network_power
                for r in just_cb if r.algorithm == "cb"}
        theirs = {(r.trial, r.sweep_value): r.network_power
                  for r in both if r.algorithm == "cb"}
        assert mine == theirs

    def test_deterministic_records(self):
        config = tiny_config()
        a = run_sweep(config, "sinr")
        b = run_sweep(config, "sinr")
        for ra, rb in zip(a, b):
            assert (ra.algorithm, ra.trial, ra.sweep_value) == \
                (rb.algorithm, rb.trial, rb.sweep_value)
            assert ra.network_power == rb.network_power
            assert ra.socp_count == rb.socp_count

    def test_transport_sweep_overrides_overhead(self):
        config = tiny_config(transport_sweep_w=(2.0, 40.0), trials=1,
                             algorithms=("cb",))
        records = run_sweep(config, "transport")
        by_value = {r.sweep_value: r for r in records}
        # CB pays the full overhead, so network power moves 1:1 with L * p_c
        delta = by_value[40.0].network_power - by_value[2.0].network_power
        assert delta == pytest.approx(3 * 38.0, rel=1e-9)

    def test_users_sweep_changes_population(self):
        config = tiny_config(user_counts=(1, 2), trials=1, algorithms=("cb",),
                             sinr_target_db=0.0)
        records = run_sweep(config, "users")
        assert {r.sweep_value for r in records} == {1.0, 2.0}

    def test_single_point(self):
        config = tiny_config(trials=1, sinr_target_db=2.0)
        records = run_sweep(config, "single")
        assert len(records) == 2
        assert all(r.sweep_value == 2.0 for r in records)

    def test_unknown_sweep_rejected(self):
        with pytest.raises(ValueError):
            run_sweep(tiny_config(), "frequency")


def _record(algorithm, trial, value, status="optimal", network=50.0):
    return ResultRecord(config_hash="d" * 12, trial=trial, sub_seed=1,
                        algorithm=algorithm, sweep_var="sinr_db",
                        sweep_value=value, status=status,
                        num_active=2 if status == "optimal" else None,
                        transmit_power=0.1 if status == "optimal" else None,
                        network_power=network if status == "optimal" else None,
                        socp_count=3, wall_time=0.5)


class TestSummarize:
    def test_single_record_mean(self):
        rows = summarize([_record("cb", 0, 0.0, network=42.0)])
        assert len(rows) == 1
        assert rows[0].mean_network_power == pytest.approx(42.0)
        assert rows[0].common_optimal_trials == 1

    def test_infeasible_trial_excluded_pairwise(self):
        records = []
        for trial in range(10):
            records.append(_record("cb", trial, 0.0, network=100.0 + trial))
            status = "infeasible" if trial == 3 else "optimal"
            records.append(_record("greedy", trial, 0.0, status=status,
                                   network=50.0 + trial))
        rows = {r.algorithm: r for r in summarize(records)}
        common = [t for t in range(10) if t != 3]
        assert rows["greedy"].infeasible == 1
        assert rows["greedy"].common_optimal_trials == 9
        assert rows["cb"].mean_network_power == pytest.approx(
            np.mean([100.0 + t for t in common]))
        assert rows["greedy"].mean_network_power == pytest.approx(
            np.mean([50.0 + t for t in common]))

    def test_permutation_invariance(self):
        records = [_record("cb", t, v, network=60.0 + t + v)
                   for t in range(3) for v in (0.0, 2.0)]
        forward = summarize(records)
        backward = summarize(records[::-1])
        assert forward == backward

    def test_paired_means_preserve_order(self):
        records = []
        for trial in range(5):
            base = 40.0 + trial
            records.append(_record("exhaustive", trial, 0.0, network=base))
            records.append(_record("greedy", trial, 0.0, network=base + 0.5))
            records.append(_record("cb", trial, 0.0, network=base + 10.0))
        rows = {r.algorithm: r for r in summarize(records)}
        assert rows["exhaustive"].mean_network_power <= \
            rows["greedy"].mean_network_power <= rows["cb"].mean_network_power


class TestEmitResults:
    def test_empty_records_header_only(self, tmp_path):
        raw, summary = emit_results([], str(tmp_path))
        assert open(raw).read() == RAW_HEADER + "\n"
        assert open(summary).read() == SUMMARY_HEADER + "\n"

    def test_row_format(self, tmp_path):
        record = _record("cb", 0, 0.0, network=1.0 / 3.0)
        raw, _ = emit_results([record], str(tmp_path))
        lines = open(raw).read().splitlines()
        assert lines[0] == RAW_HEADER
        fields = lines[1].split(",")
        assert fields[0] == "d" * 12
        assert fields[3] == "cb"
        assert fields[9] == "0.333333333"  # 9 significant digits
        assert fields[11] == "0"           # timing suppressed by default

    def test_timing_opt_in(self, tmp_path):
        record = _record("cb", 0, 0.0)
        raw, _ = emit_results([record], str(tmp_path), include_timing=True)
        assert open(raw).read().splitlines()[1].split(",")[11] == "0.5"

    def test_none_fields_render_empty(self, tmp_path):
        record = _record("cb", 0, 0.0, status="infeasible")
        raw, _ = emit_results([record], str(tmp_path))
        fields = open(raw).read().splitlines()[1].split(",")
        assert fields[6] == "infeasible"
        assert fields[7] == fields[8] == fields[9] == ""

    def test_byte_identical_across_reruns(self, tmp_path):
        config = tiny_config()
        raw1, sum1 = emit_results(run_sweep(config, "sinr"), str(tmp_path / "a"))
        raw2, sum2 = emit_results(run_sweep(config, "sinr"), str(tmp_path / "b"))
        assert open(raw1, "rb").read() == open(raw2, "rb").read()
        assert open(sum1, "rb").read() == open(sum2, "rb").read()


class TestSnapshots:
    def test_roundtrip_bits(self, tmp_path):
        instance = generate_scenario(500.0, 3, 2, 2,
                                     trial_seed(5, 0, 0))
        chan = generate_channel(instance, ChannelParams(), trial_seed(5, 0, 1))
        path = str(tmp_path / "snap.json")
        save_snapshot(path, instance, chan)
        inst2, chan2 = load_snapshot(path)
        assert np.array_equal(instance.rrh_positions, inst2.rrh_positions)
        assert np.array_equal(instance.user_positions, inst2.user_positions)
        assert np.array_equal(instance.power.p_delta, inst2.power.p_delta)
        for b1, b2 in zip(chan.blocks, chan2.blocks):
            assert np.array_equal(b1, b2)

    def test_snapshot_bytes_stable(self, tmp_path):
        instance = generate_scenario(500.0, 2, 2, 1, trial_seed(9, 1, 0))
        chan = generate_channel(instance, ChannelParams(), trial_seed(9, 1, 1))
        p1, p2 = str(tmp_path / "a.json"), str(tmp_path / "b.json")
        save_snapshot(p1, instance, chan)
        save_snapshot(p2, instance, chan)
        assert open(p1, "rb").read() == open(p2, "rb").read()
