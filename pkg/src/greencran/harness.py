"""Experiment configuration, Monte Carlo sweeps, and result persistence.

A sweep fixes a scenario family and runs every configured algorithm on the
same per-trial channel draws (paired comparison), sweeping either the target
SINR, the common transport-link overhead, or the user count.  Records land
in a raw CSV (one row per trial/algorithm/point) plus a summary CSV with
means over the trials where all algorithms were simultaneously optimal.

Reproducibility: one master seed is split hierarchically per (trial,
entity), so adding or removing algorithms never perturbs the scenario or
channel draws, and reruns are byte-identical.  Wall-clock timings are kept
in memory but written as zero unless timing output is explicitly enabled,
so the raw CSV stays byte-deterministic by default.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass

import numpy as np

from .algorithms import ALGORITHM_NAMES, run_algorithm
from .channel import ChannelParams, ChannelState, generate_channel, generate_scenario
from .conic import SolverSettings
from .model import NetworkInstance, PowerModel, QoSSpec, SolveStatus

SCENARIO_ENTITY = 0
CHANNEL_ENTITY = 1

SWEEP_VARS = {"sinr": "sinr_db", "transport": "p_c_w", "users": "num_users",
              "single": "sinr_db"}

RAW_HEADER = ("config_hash,trial,sub_seed,algorithm,sweep_var,sweep_value,"
              "status,num_active,transmit_power_w,network_power_w,socp_count,"
              "wall_time_s")
SUMMARY_HEADER = ("algorithm,sweep_var,sweep_value,trials,common_optimal_trials,"
                  "mean_network_power_w,infeasible,failures")


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative description of one experiment family.

    ``transport_power_w`` may be null (pico/PON default overhead per RRH), a
    scalar applied to every RRH, or a per-RRH list.
    """

    schema_version: int = 1
    # scenario
    num_rrh: int = 10
    num_users: int = 15
    antennas: int = 2
    region_m: float = 1000.0      # half side of the square deployment region
    # channel
    pathloss_intercept_db: float = 148.1
    pathloss_slope_db: float = 37.6
    shadowing_sigma_db: float = 8.0
    antenna_gain_dbi: float = 9.0
    fading: bool = True
    # power
    eta: float = 4.0
    p_max_w: float = 1.0
    transport_power_w: object = None
    # QoS
    noise_dbm: float = -102.0
    sinr_target_db: float = 4.0   # used by single-point runs and non-SINR sweeps
    sinr_sweep_db: tuple = (0.0, 2.0, 4.0, 6.0)
    transport_sweep_w: tuple = (5.0, 10.0, 20.0, 30.0)
    user_counts: tuple = (5, 10, 15, 20)
    # execution
    algorithms: tuple = ("cb", "greedy", "bisection", "iterative", "sp", "rminlp")
    trials: int = 10
    master_seed: int = 2024
    exhaustive_max_rrh: int = 12
    # solver
    feas_tol: float = 1e-8
    gap_tol: float = 1e-8
    max_iters: int = 200
    cert_tol: float = 1e-6
    # output
    out_dir: str = "results"
    timing: bool = False

    def __post_init__(self):
        for name in ("sinr_sweep_db", "transport_sweep_w", "user_counts", "algorithms"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.trials < 1:
            raise ValueError("need at least one trial")
        for name in ("sinr_sweep_db", "transport_sweep_w", "user_counts"):
            if not getattr(self, name):
                raise ValueError(f"sweep {name} must be nonempty")
        unknown = set(self.algorithms) - set(ALGORITHM_NAMES)
        if unknown:
            raise ValueError(f"unknown algorithms {sorted(unknown)}; "
                             f"choose from {ALGORITHM_NAMES}")
        if "exhaustive" in self.algorithms and self.num_rrh > self.exhaustive_max_rrh:
            raise ValueError("exhaustive search is only enabled up to "
                             f"{self.exhaustive_max_rrh} RRHs")
        if isinstance(self.transport_power_w, (list, tuple)):
            values = tuple(float(v) for v in self.transport_power_w)
            if len(values) != self.num_rrh:
                raise ValueError("per-RRH transport power list must have one "
                                 "entry per RRH")
            object.__setattr__(self, "transport_power_w", values)
        elif self.transport_power_w is not None:
            object.__setattr__(self, "transport_power_w", float(self.transport_power_w))

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        """Load a JSON config; unknown keys are rejected, missing keys default."""
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if data.get("schema_version", 1) != 1:
            raise ValueError("unsupported schema_version")
        return cls(**data)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        for name in ("sinr_sweep_db", "transport_sweep_w", "user_counts", "algorithms"):
            out[name] = list(out[name])
        if isinstance(out["transport_power_w"], tuple):
            out["transport_power_w"] = list(out["transport_power_w"])
        return out

    def config_hash(self) -> str:
        """Identifier of the experiment content; output-only fields (paths,
        timing emission) do not enter the hash."""
        payload = self.to_dict()
        payload.pop("out_dir", None)
        payload.pop("timing", None)
        canon = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:12]

    def channel_params(self) -> ChannelParams:
        return ChannelParams(pathloss_intercept_db=self.pathloss_intercept_db,
                             pathloss_slope_db=self.pathloss_slope_db,
                             shadowing_sigma_db=self.shadowing_sigma_db,
                             antenna_gain_dbi=self.antenna_gain_dbi,
                             fading=self.fading)

    def solver_settings(self) -> SolverSettings:
        return SolverSettings(feas_tol=self.feas_tol, gap_tol=self.gap_tol,
                              max_iters=self.max_iters, cert_tol=self.cert_tol)

    def power_model(self, p_delta_override=None) -> PowerModel:
        L = self.num_rrh
        if p_delta_override is not None:
            p_delta = np.full(L, float(p_delta_override))
        elif self.transport_power_w is None:
            return PowerModel.uniform(L, eta=self.eta, p_max=self.p_max_w)
        else:
            p_delta = np.broadcast_to(np.asarray(self.transport_power_w, dtype=float), (L,))
        return PowerModel.uniform(L, eta=self.eta, p_max=self.p_max_w, p_delta=p_delta)


@dataclass(frozen=True)
class ResultRecord:
    config_hash: str
    trial: int
    sub_seed: int
    algorithm: str
    sweep_var: str
    sweep_value: float
    status: str
    num_active: int | None
    transmit_power: float | None  # [W]
    network_power: float | None   # [W]
    socp_count: int
    wall_time: float              # [s]


def trial_seed(master_seed: int, trial: int, entity: int) -> np.random.SeedSequence:
    """Hierarchical sub-seed for (trial, entity); entity 0 draws the scenario,
    entity 1 the channel."""
    return np.random.SeedSequence(master_seed, spawn_key=(trial, entity))


def _printed_sub_seed(master_seed: int, trial: int) -> int:
    state = np.random.SeedSequence(master_seed, spawn_key=(trial,)).generate_state(
        1, dtype=np.uint64)
    return int(state[0])


def _sweep_points(config: ExperimentConfig, sweep: str) -> list:
    if sweep == "sinr":
        return [float(v) for v in config.sinr_sweep_db]
    if sweep == "transport":
        return [float(v) for v in config.transport_sweep_w]
    if sweep == "users":
        return [int(v) for v in config.user_counts]
    if sweep == "single":
        return [float(config.sinr_target_db)]
    raise ValueError(f"unknown sweep {sweep!r}; choose from {sorted(SWEEP_VARS)}")


def run_sweep(config: ExperimentConfig, sweep: str = "sinr") -> list:
    """Run every configured algorithm over the sweep grid.

    For each trial the scenario and channel are generated once from the
    trial sub-seeds and shared across algorithms (and across sweep points
    whenever the sweep variable allows it).  Solver failures are recorded
    per record and the sweep continues.
    """
    points = _sweep_points(config, sweep)
    sweep_var = SWEEP_VARS[sweep]
    chash = config.config_hash()
    params = config.channel_params()
    settings = config.solver_settings()
    records = []
    cache = {}  # (trial, num_users) -> (instance, channel)
    for value in points:
        num_users = int(value) if sweep == "users" else config.num_users
        sinr_db = value if sweep in ("sinr", "single") else config.sinr_target_db
        model = config.power_model(p_delta_override=value if sweep == "transport"
                                   else None)
        for trial in range(config.trials):
            key = (trial, num_users)
            if key not in cache:
                instance = generate_scenario(
                    config.region_m, config.num_rrh, num_users, config.antennas,
                    trial_seed(config.master_seed, trial, SCENARIO_ENTITY),
                    power=model)
                chan = generate_channel(
                    instance, params, trial_seed(config.master_seed, trial,
                                                 CHANNEL_ENTITY))
                cache[key] = chan
            chan = cache[key]
            qos = QoSSpec.from_db(sinr_db, config.noise_dbm, num_users)
            sub_seed = _printed_sub_seed(config.master_seed, trial)
            for name in config.algorithms:
                outcome, _ = run_algorithm(name, chan, qos, model, settings,
                                           exhaustive_max_rrh=config.exhaustive_max_rrh)
                optimal = outcome.status is SolveStatus.OPTIMAL
                records.append(ResultRecord(
                    config_hash=chash, trial=trial, sub_seed=sub_seed,
                    algorithm=name, sweep_var=sweep_var, sweep_value=float(value),
                    status=outcome.status.value,
                    num_active=len(outcome.active_set) if optimal else None,
                    transmit_power=outcome.transmit_power if optimal else None,
                    network_power=outcome.network_power if optimal else None,
                    socp_count=outcome.socp_count,
                    wall_time=outcome.wall_time))
    return records


@dataclass(frozen=True)
class SummaryRow:
    algorithm: str
    sweep_var: str
    sweep_value: float
    trials: int
    common_optimal_trials: int
    mean_network_power: float | None
    infeasible: int
    failures: int


def summarize(records) -> list:
    """Per-(algorithm, sweep point) means over the common-feasible trials.

    A trial enters an average only if every algorithm present at that sweep
    point was optimal on it, keeping the curves comparable; infeasible and
    failed trials are counted separately.
    """
    by_point = {}
    for rec in records:
        by_point.setdefault((rec.sweep_var, rec.sweep_value), []).append(rec)
    rows = []
    for (sweep_var, value), recs in sorted(by_point.items()):
        algorithms = sorted({r.algorithm for r in recs})
        status = {}
        for r in recs:
            status[(r.trial, r.algorithm)] = r
        trials = sorted({r.trial for r in recs})
        common = [t for t in trials
                  if all((t, a) in status and status[(t, a)].status == "optimal"
                         for a in algorithms)]
        for a in algorithms:
            mine = [status[(t, a)] for t in trials if (t, a) in status]
            values = [status[(t, a)].network_power for t in common]
            mean = float(np.mean(values)) if values else None
            rows.append(SummaryRow(
                algorithm=a, sweep_var=sweep_var, sweep_value=float(value),
                trials=len(mine), common_optimal_trials=len(common),
                mean_network_power=mean,
                infeasible=sum(r.status == "infeasible" for r in mine),
                failures=sum(r.status == "failure" for r in mine)))
    rows.sort(key=lambda r: (r.sweep_var, r.sweep_value, r.algorithm))
    return rows


def _fmt(value) -> str:
    if value is None:
        return ""
    return "%.9g" % value


def emit_results(records, out_dir: str, include_timing: bool = False) -> tuple:
    """Write ``raw.csv`` and ``summary.csv`` under ``out_dir``.

    Output is byte-deterministic given identical records; measured wall
    times are written only when ``include_timing`` is set (zeros otherwise),
    so default output is reproducible across reruns with the same seed.
    """
    os.makedirs(out_dir, exist_ok=True)
    raw_path = os.path.join(out_dir, "raw.csv")
    summary_path = os.path.join(out_dir, "summary.csv")
    ordered = sorted(records, key=lambda r: (r.sweep_var, r.sweep_value,
                                             r.trial, r.algorithm))
    with open(raw_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(RAW_HEADER + "\n")
        for r in ordered:
            wall = r.wall_time if include_timing else 0.0
            fh.write(",".join([
                r.config_hash, str(r.trial), str(r.sub_seed), r.algorithm,
                r.sweep_var, _fmt(r.sweep_value), r.status,
                "" if r.num_active is None else str(r.num_active),
                _fmt(r.transmit_power), _fmt(r.network_power),
                str(r.socp_count), _fmt(wall)]) + "\n")
    with open(summary_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(SUMMARY_HEADER + "\n")
        for row in summarize(ordered):
            fh.write(",".join([
                row.algorithm, row.sweep_var, _fmt(row.sweep_value),
                str(row.trials), str(row.common_optimal_trials),
                _fmt(row.mean_network_power), str(row.infeasible),
                str(row.failures)]) + "\n")
    return raw_path, summary_path


def scenario_to_dict(instance: NetworkInstance) -> dict:
    power = instance.power
    power_dict = {"eta": power.eta.tolist(), "p_max": power.p_max.tolist(),
                  "p_delta": power.p_delta.tolist(), "p_olt": power.p_olt}
    if power.p_active_rrh is not None:
        power_dict.update({
            "p_active_rrh": power.p_active_rrh.tolist(),
            "p_active_tl": power.p_active_tl.tolist(),
            "p_sleep_rrh": power.p_sleep_rrh.tolist(),
            "p_sleep_tl": power.p_sleep_tl.tolist()})
    return {"antennas": instance.antennas.tolist(),
            "rrh_positions": instance.rrh_positions.tolist(),
            "user_positions": instance.user_positions.tolist(),
            "region": instance.region,
            "power": power_dict}


def scenario_from_dict(data: dict) -> NetworkInstance:
    power = PowerModel(eta=np.asarray(data["power"]["eta"]),
                       p_max=np.asarray(data["power"]["p_max"]),
                       p_delta=np.asarray(data["power"]["p_delta"]),
                       p_olt=data["power"]["p_olt"],
                       p_active_rrh=data["power"].get("p_active_rrh"),
                       p_active_tl=data["power"].get("p_active_tl"),
                       p_sleep_rrh=data["power"].get("p_sleep_rrh"),
                       p_sleep_tl=data["power"].get("p_sleep_tl"))
    return NetworkInstance(antennas=np.asarray(data["antennas"], dtype=int),
                           rrh_positions=np.asarray(data["rrh_positions"]),
                           user_positions=np.asarray(data["user_positions"]),
                           region=float(data["region"]), power=power)


def channel_to_dict(channel: ChannelState) -> dict:
    blocks = [np.stack([b.real, b.imag], axis=-1).tolist() for b in channel.blocks]
    return {"blocks": blocks}


def channel_from_dict(data: dict) -> ChannelState:
    blocks = []
    for raw in data["blocks"]:
        arr = np.asarray(raw, dtype=float)
        blocks.append(arr[..., 0] + 1j * arr[..., 1])
    return ChannelState(tuple(blocks))


def save_snapshot(path: str, instance: NetworkInstance, channel: ChannelState) -> None:
    """Persist one (scenario, channel) pair as a regression fixture."""
    payload = {"schema_version": 1,
               "scenario": scenario_to_dict(instance),
               "channel": channel_to_dict(channel)}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_snapshot(path: str) -> tuple:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("schema_version") != 1:
        raise ValueError("unsupported snapshot schema_version")
    return scenario_from_dict(payload["scenario"]), channel_from_dict(payload["channel"])
