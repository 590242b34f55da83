"""Minimum-network-power operation of a Cloud-RAN downlink.

Joint selection of active remote radio heads and coordinated transmit
beamforming under per-user SINR targets and per-RRH power budgets, with a
greedy selector, group-sparse selection pipelines, baselines, and a seeded
Monte Carlo experiment harness.
"""

from .algorithms import (ALGORITHM_NAMES, AlgorithmTrace, TraceStep,
                         bisection_group_sparse, coordinated_beamforming,
                         exhaustive_search, greedy_selection,
                         iterative_group_sparse, relaxed_selection_deflation,
                         run_algorithm, sparsity_pattern_baseline)
from .channel import (ChannelParams, ChannelState, channel_power_gain,
                      channel_power_gains, generate_channel, generate_scenario,
                      path_loss_db)
from .conic import (ConeBlock, ConicProblem, GroupNormSolution, RelaxationSolution,
                    SocpResult, SolutionReport, SolverSettings, achieved_sinr,
                    build_power_min, build_selection_relaxation,
                    build_weighted_group_norm, solve_power_min,
                    solve_selection_relaxation, solve_socp,
                    solve_weighted_group_norm, verify_solution)
from .harness import (ExperimentConfig, ResultRecord, SummaryRow, emit_results,
                      load_snapshot, run_sweep, save_snapshot, summarize)
from .model import (Beamformer, NetworkInstance, PowerModel, QoSSpec, SolveOutcome,
                    SolveStatus, db_to_linear, dbm_to_watts, linear_to_db,
                    network_power, rrh_power, support_transport_power,
                    transmit_power, transport_power, watts_to_dbm)
from .oracle import sdr_power_min
from .sparsity import (GroupWeights, aligned_dual, dual_pairing,
                       homogeneous_bound_weights, homogeneous_lower_bound,
                       initial_weights, log_sum_penalty, mixed_norm, omega,
                       omega_dual, ordering_scores, reweight,
                       sparsity_ordering_scores)

__version__ = "0.1.0"
