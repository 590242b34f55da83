"""Command-line front end: sweeps, single runs, and invariant validation."""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
import tempfile

import numpy as np

from . import algorithms as alg
from . import conic, harness, oracle, sparsity
from .channel import ChannelParams, ChannelState, generate_channel, generate_scenario
from .model import (Beamformer, PowerModel, QoSSpec, SolveStatus,
                    support_transport_power, transmit_power)

_SWEEP_BY_COMMAND = {"sweep-sinr": "sinr", "sweep-transport": "transport",
                     "sweep-users": "users", "single": "single"}


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="PATH",
                        help="JSON experiment config (defaults used otherwise)")
    parser.add_argument("--seed", type=int, metavar="U64",
                        help="override the master seed")
    parser.add_argument("--trials", type=int, metavar="N",
                        help="override the trial count")
    parser.add_argument("--algorithms", metavar="CSV",
                        help="comma-separated algorithm list, e.g. cb,greedy,bisection")
    parser.add_argument("--out", metavar="DIR", help="output directory")
    parser.add_argument("--timing", action="store_true",
                        help="write measured wall times into the raw CSV "
                             "(breaks byte-reproducibility)")
    parser.add_argument("--strict", action="store_true",
                        help="exit nonzero if any solver failure was recorded")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="greencran",
        description="Joint RRH selection and coordinated beamforming sweeps "
                    "for minimum Cloud-RAN network power.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("sweep-sinr", help="sweep the target SINR (dB)")
    sub.add_parser("sweep-transport", help="sweep the common transport overhead (W)")
    sub.add_parser("sweep-users", help="sweep the number of users")
    sub.add_parser("single", help="run all algorithms at one operating point")
    val = sub.add_parser("validate", help="run the built-in invariant checks")
    val.add_argument("--seed", type=int, default=7)
    for name, p in sub.choices.items():
        if name != "validate":
            _common_flags(p)
    return parser


def _load_config(args) -> harness.ExperimentConfig:
    if args.config:
        config = harness.ExperimentConfig.from_file(args.config)
    else:
        config = harness.ExperimentConfig()
    overrides = {}
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.algorithms:
        overrides["algorithms"] = tuple(s.strip() for s in args.algorithms.split(","))
    if args.out:
        overrides["out_dir"] = args.out
    if args.timing:
        overrides["timing"] = True
    return dataclasses.replace(config, **overrides) if overrides else config


def _print_summary(rows) -> None:
    print(f"{'algorithm':<11} {'sweep':<10} {'value':>8} {'trials':>6} "
          f"{'common':>6} {'mean net power [W]':>19} {'infeas':>6} {'fail':>5}")
    for r in rows:
        mean = "-" if r.mean_network_power is None else f"{r.mean_network_power:.4f}"
        print(f"{r.algorithm:<11} {r.sweep_var:<10} {r.sweep_value:>8g} "
              f"{r.trials:>6} {r.common_optimal_trials:>6} {mean:>19} "
              f"{r.infeasible:>6} {r.failures:>5}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "validate":
        return run_validation(args.seed)
    try:
        config = _load_config(args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    sweep = _SWEEP_BY_COMMAND[args.command]
    records = harness.run_sweep(config, sweep)
    raw_path, summary_path = harness.emit_results(records, config.out_dir,
                                                  include_timing=config.timing)
    _print_summary(harness.summarize(records))
    failures = sum(r.status == "failure" for r in records)
    print(f"\nraw records: {raw_path}\nsummary:     {summary_path}")
    if failures:
        print(f"warning: {failures} solver failure(s) recorded", file=sys.stderr)
        if args.strict:
            return 1
    return 0


# ---------------------------------------------------------------------------
# built-in validation suite (the `validate` subcommand)

def _check(name: str, ok: bool, detail: str = "") -> bool:
    print(f"[{'PASS' if ok else 'FAIL'}] {name}" + (f" ({detail})" if detail else ""))
    return ok


def _random_beamformer(rng, antennas, num_users, sparse=False) -> Beamformer:
    blocks = []
    for n in antennas:
        b = (rng.standard_normal((num_users, n))
             + 1j * rng.standard_normal((num_users, n)))
        if sparse and rng.random() < 0.4:
            b = np.zeros_like(b)
        blocks.append(b)
    return Beamformer(tuple(blocks))


def _validation_instance(rng, num_rrh=4, num_users=3):
    model = PowerModel.uniform(num_rrh, p_delta=rng.uniform(3.0, 12.0, num_rrh))
    instance = generate_scenario(600.0, num_rrh, num_users, 2, rng, power=model)
    chan = generate_channel(instance, ChannelParams(), rng)
    qos = QoSSpec.from_db(2.0, -102.0, num_users)
    return chan, qos, model


def run_validation(seed: int = 7) -> int:
    rng = np.random.default_rng(seed)
    ok = True

    # single-user closed form: T* = gamma sigma^2 / sum_l eta_l ||h_l||^2
    worst = 0.0
    for _ in range(20):
        L = int(rng.integers(1, 4))
        antennas = [int(rng.integers(1, 3)) for _ in range(L)]
        blocks = tuple((rng.standard_normal((1, n)) + 1j * rng.standard_normal((1, n)))
                       / np.sqrt(2) for n in antennas)
        chan = ChannelState(blocks)
        eta = rng.uniform(2.0, 5.0, L)
        model = PowerModel(eta=eta, p_max=np.full(L, 1e6), p_delta=np.full(L, 5.6))
        qos = QoSSpec(gamma=[float(rng.uniform(0.5, 4.0))], sigma2=[1.0])
        out = conic.solve_power_min(range(L), chan, qos, model)
        expected = qos.gamma[0] * qos.sigma2[0] / sum(
            eta[l] * np.linalg.norm(blocks[l]) ** 2 for l in range(L))
        worst = max(worst, abs(out.transmit_power - expected) / expected)
    ok &= _check("single-user closed-form optimum", worst < 1e-6,
                 f"max rel err {worst:.2e}")

    # lower-bound chain and dual pairing on random beamformers
    chain_ok, pair_ok = True, True
    for _ in range(200):
        L = int(rng.integers(1, 6))
        antennas = [int(rng.integers(1, 4)) for _ in range(L)]
        model = PowerModel.uniform(L, eta=float(rng.uniform(2, 6)),
                                   p_delta=rng.uniform(0.5, 20.0, L))
        w = _random_beamformer(rng, antennas, int(rng.integers(1, 5)), sparse=True)
        total = transmit_power(w, model) + support_transport_power(w, model)
        p_h = sparsity.homogeneous_lower_bound(w, model)
        om = sparsity.omega(w, model)
        chain_ok &= om <= p_h * (1 + 1e-12) + 1e-12 and p_h <= total * (1 + 1e-12) + 1e-12
        y = _random_beamformer(rng, antennas, w.num_users)
        pair_ok &= sparsity.dual_pairing(w, y) <= \
            om * sparsity.omega_dual(y, model) * (1 + 1e-9) + 1e-12
        aligned = sparsity.aligned_dual(w, model)
        if w.norm() > 0:
            pair_ok &= abs(sparsity.dual_pairing(w, aligned) - om) <= 1e-9 * max(1.0, om)
    ok &= _check("lower-bound chain omega <= p_h <= T + F", chain_ok)
    ok &= _check("dual-norm pairing inequality and aligned equality", pair_ok)

    # every algorithm on one realistic instance: verified solutions + sandwich
    chan, qos, model = _validation_instance(rng)
    outcomes = {}
    for name in alg.ALGORITHM_NAMES:
        outcome, _ = alg.run_algorithm(name, chan, qos, model)
        outcomes[name] = outcome
        if outcome.status is SolveStatus.OPTIMAL:
            report = conic.verify_solution(outcome.beamformer, outcome.active_set,
                                           chan, qos, model, tol=1e-6)
            ok &= _check(f"{name}: solution verifies at tol 1e-6", report.passed)
    statuses = {o.status for o in outcomes.values()}
    ok &= _check("all algorithms agree on feasibility", len(statuses) == 1)
    if outcomes["exhaustive"].status is SolveStatus.OPTIMAL:
        base = outcomes["exhaustive"].network_power
        cb = outcomes["cb"].network_power
        slack = 1e-8
        sandwich = all(base <= outcomes[n].network_power + slack
                       for n in alg.ALGORITHM_NAMES if n != "exhaustive")
        sandwich &= outcomes["greedy"].network_power <= cb + slack
        sandwich &= outcomes["iterative"].network_power <= cb + slack
        ok &= _check("sandwich: exhaustive <= heuristics, greedy/iterative <= cb",
                     sandwich)

    # SDR cross-check on the same instance's full set
    status, value = oracle.sdr_power_min(range(chan.num_rrh), chan, qos, model)
    if status == "optimal":
        rel = abs(outcomes["cb"].transmit_power - value) / max(1e-12, abs(value))
        ok &= _check("full-set optimum matches the SDR reference", rel < 1e-5,
                     f"rel err {rel:.2e}")
    else:
        ok &= _check("full-set optimum matches the SDR reference", False, status)

    # determinism of a tiny sweep
    config = harness.ExperimentConfig(
        num_rrh=4, num_users=3, trials=2, sinr_sweep_db=(0.0, 4.0),
        algorithms=("cb", "bisection"), master_seed=seed)
    with tempfile.TemporaryDirectory() as tmp:
        raw1, _ = harness.emit_results(harness.run_sweep(config, "sinr"),
                                       os.path.join(tmp, "a"))
        raw2, _ = harness.emit_results(harness.run_sweep(config, "sinr"),
                                       os.path.join(tmp, "b"))
        with open(raw1, "rb") as f1, open(raw2, "rb") as f2:
            same = f1.read() == f2.read()
    ok &= _check("repeated sweep is byte-identical", same)

    print("\nvalidation " + ("PASSED" if ok else "FAILED"))
    return 0 if ok else 2


if __name__ == "__main__":
    sys.exit(main())
