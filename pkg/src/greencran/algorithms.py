"""End-to-end solvers for joint RRH selection and beamforming.

Seven strategies share the same per-set power minimization kernel:

* ``cb``          -- coordinated beamforming over the full RRH set;
* ``exhaustive``  -- enumerate every nonempty subset (global optimum at
                     desk scale; the complexity is exponential in L);
* ``greedy``      -- switch off one RRH per step, choosing the removal that
                     minimizes network power; quadratic SOCP count;
* ``bisection``   -- one weighted group-norm solve, priority ordering, and a
                     binary search for the longest removable prefix;
                     logarithmic SOCP count;
* ``iterative``   -- reweighted group-norm iterations followed by a
                     conservative prefix scan; linear SOCP count;
* ``sp``          -- the bisection pipeline with unweighted norms and a
                     beamformer-only ordering (baseline);
* ``rminlp``      -- a continuous relaxation of the on/off selection drives
                     the deflation order; linear SOCP count.

Solver failures abort the run with a diagnostic instead of masquerading as
infeasibility; every feasibility verdict traces back to a certified cone
program.  All algorithms are deterministic, so paired trials across
algorithms see identical scenarios.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import ChannelState
from .conic import SolverSettings, solve_power_min, solve_selection_relaxation, \
    solve_weighted_group_norm
from .model import PowerModel, QoSSpec, SolveOutcome, SolveStatus
from .sparsity import GroupWeights, homogeneous_bound_weights, initial_weights, \
    log_sum_penalty, ordering_scores, reweight, sparsity_ordering_scores

ALGORITHM_NAMES = ("cb", "exhaustive", "greedy", "bisection", "iterative",
                   "sp", "rminlp")

# Stage-1 stopping rule of the reweighted pipeline: relative change of the
# log-sum objective below this threshold ends the iteration early.
REWEIGHT_CONVERGENCE_RTOL = 1e-4


@dataclass(frozen=True)
class TraceStep:
    stage: int
    active_set: tuple
    action: str          # "solve" | "probe" | "select" | "relax"
    status: str
    value: float | None  # network power (or objective for stage-1 solves)
    socp_count: int      # cumulative solves after this step


@dataclass
class AlgorithmTrace:
    algorithm: str
    steps: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    @property
    def socp_count(self) -> int:
        return self.steps[-1].socp_count if self.steps else 0


class _Runner:
    """Counts cone-program solves and accumulated solver time for one run."""

    def __init__(self, channel: ChannelState, qos: QoSSpec, model: PowerModel,
                 settings: SolverSettings | None):
        self.channel = channel
        self.qos = qos
        self.model = model
        self.settings = settings
        self.socp_count = 0

    def power_min(self, active) -> SolveOutcome:
        out = solve_power_min(active, self.channel, self.qos, self.model, self.settings)
        self.socp_count += 1
        return out

    def weighted(self, weights):
        sol = solve_weighted_group_norm(weights, self.channel, self.qos, self.model,
                                        self.settings)
        self.socp_count += 1
        return sol

    def relaxation(self):
        sol = solve_selection_relaxation(self.channel, self.qos, self.model,
                                         self.settings)
        self.socp_count += 1
        return sol


def _finish(outcome: SolveOutcome, runner: _Runner, started: float,
            diagnostics: str = "") -> SolveOutcome:
    return replace(outcome, socp_count=runner.socp_count,
                   wall_time=time.perf_counter() - started,
                   diagnostics=diagnostics or outcome.diagnostics)


def _non_optimal(status: SolveStatus, active, runner: _Runner, started: float,
                 diagnostics: str) -> SolveOutcome:
    return SolveOutcome(status=status, active_set=tuple(active),
                        socp_count=runner.socp_count,
                        wall_time=time.perf_counter() - started,
                        diagnostics=diagnostics)


def coordinated_beamforming(channel: ChannelState, qos: QoSSpec, model: PowerModel,
                            settings: SolverSettings | None = None) -> SolveOutcome:
    """Minimize transmit power with every RRH active; network power then adds
    the full transport overhead."""
    started = time.perf_counter()
    runner = _Runner(channel, qos, model, settings)
    out = runner.power_min(range(channel.num_rrh))
    return _finish(out, runner, started)


def exhaustive_search(channel: ChannelState, qos: QoSSpec, model: PowerModel,
                      settings: SolverSettings | None = None,
                      max_rrh: int = 12) -> tuple:
    """Global optimum by solving the power minimization on every nonempty
    subset; subsets are enumerated by size, then lexicographically, and ties
    keep the first minimizer.  Refused above ``max_rrh`` RRHs (2^L - 1 cone
    programs): use the greedy or group-sparse heuristics instead."""
    started = time.perf_counter()
    L = channel.num_rrh
    if L > max_rrh:
        raise ValueError(f"exhaustive search over {L} RRHs would need {2 ** L - 1} "
                         f"solves; raise max_rrh explicitly or use a heuristic")
    runner = _Runner(channel, qos, model, settings)
    trace = AlgorithmTrace("exhaustive")
    best = None
    for size in range(1, L + 1):
        for combo in itertools.combinations(range(L), size):
            out = runner.power_min(combo)
            trace.steps.append(TraceStep(size, combo, "probe", out.status.value,
                                         out.network_power, runner.socp_count))
            if out.status is SolveStatus.SOLVER_FAILURE:
                return (_non_optimal(SolveStatus.SOLVER_FAILURE, combo, runner,
                                     started, out.diagnostics), trace)
            if out.status is SolveStatus.OPTIMAL:
                if best is None or out.network_power < best.network_power:
                    best = out
    if best is None:
        return (_non_optimal(SolveStatus.INFEASIBLE, range(L), runner, started,
                             "no feasible RRH subset"), trace)
    trace.steps.append(TraceStep(L + 1, best.active_set, "select", "optimal",
                                 best.network_power, runner.socp_count))
    return _finish(best, runner, started), trace


def greedy_selection(channel: ChannelState, qos: QoSSpec, model: PowerModel,
                     settings: SolverSettings | None = None) -> tuple:
    """Backward greedy selection.

    Starting from the full set, each step removes the RRH whose removal
    yields the smallest network power (ties to the lowest index), until no
    single removal stays feasible.  The answer is the best stage visited,
    not necessarily the last one.
    """
    started = time.perf_counter()
    L = channel.num_rrh
    runner = _Runner(channel, qos, model, settings)
    trace = AlgorithmTrace("greedy")
    full = tuple(range(L))
    out0 = runner.power_min(full)
    trace.steps.append(TraceStep(0, full, "solve", out0.status.value,
                                 out0.network_power, runner.socp_count))
    if out0.status is SolveStatus.SOLVER_FAILURE:
        return (_non_optimal(SolveStatus.SOLVER_FAILURE, full, runner, started,
                             out0.diagnostics), trace)
    if out0.status is SolveStatus.INFEASIBLE:
        return (_non_optimal(SolveStatus.INFEASIBLE, full, runner, started,
                             "full-set problem infeasible"), trace)
    stages = [out0]
    current = list(full)
    removal_order = []
    stage = 0
    while len(current) > 1:
        stage += 1
        best = None
        best_removed = None
        for m in current:  # ascending index; strict < keeps the lowest on ties
            candidate = tuple(l for l in current if l != m)
            out = runner.power_min(candidate)
            trace.steps.append(TraceStep(stage, candidate, "probe", out.status.value,
                                         out.network_power, runner.socp_count))
            if out.status is SolveStatus.SOLVER_FAILURE:
                return (_non_optimal(SolveStatus.SOLVER_FAILURE, candidate, runner,
                                     started, out.diagnostics), trace)
            if out.status is SolveStatus.OPTIMAL:
                if best is None or out.network_power < best.network_power:
                    best = out
                    best_removed = m
        if best is None:
            break  # every single removal is infeasible
        removal_order.append(best_removed)
        current = [l for l in current if l != best_removed]
        stages.append(best)
    winner = stages[0]
    for out in stages[1:]:  # earliest stage wins ties
        if out.network_power < winner.network_power:
            winner = out
    trace.steps.append(TraceStep(stage + 1, winner.active_set, "select", "optimal",
                                 winner.network_power, runner.socp_count))
    trace.extras["removal_order"] = tuple(removal_order)
    return _finish(winner, runner, started), trace


def _prefix_active(order: np.ndarray, removed: int, num_rrh: int) -> tuple:
    off = set(int(l) for l in order[:removed])
    return tuple(l for l in range(num_rrh) if l not in off)


def _prefix_bisection(name: str, weights: GroupWeights, ordering,
                      channel: ChannelState, qos: QoSSpec, model: PowerModel,
                      settings: SolverSettings | None,
                      validate_order: bool) -> tuple:
    """Shared three-stage pipeline: weighted norm solve, ordering, binary
    search for the longest removable prefix, final solve on the survivor set.

    The binary search assumes feasibility is monotone along the prefix
    sequence; ``validate_order`` cross-checks that assumption with a full
    linear scan whose solves are accounted separately in the trace.
    """
    started = time.perf_counter()
    L = channel.num_rrh
    runner = _Runner(channel, qos, model, settings)
    trace = AlgorithmTrace(name)
    sol = runner.weighted(weights)
    trace.steps.append(TraceStep(0, tuple(range(L)), "solve", sol.status.value,
                                 sol.objective, runner.socp_count))
    if sol.status is SolveStatus.SOLVER_FAILURE:
        return (_non_optimal(SolveStatus.SOLVER_FAILURE, range(L), runner, started,
                             sol.diagnostics), trace)
    if sol.status is SolveStatus.INFEASIBLE:
        return (_non_optimal(SolveStatus.INFEASIBLE, range(L), runner, started,
                             "group-norm problem infeasible"), trace)
    theta, order = ordering(sol.beamformer)
    trace.extras["theta"] = theta
    trace.extras["order"] = order
    cache = {}

    def probe(removed: int) -> SolveOutcome:
        if removed not in cache:
            active = _prefix_active(order, removed, L)
            out = runner.power_min(active)
            trace.steps.append(TraceStep(1, active, "probe", out.status.value,
                                         out.network_power, runner.socp_count))
            cache[removed] = out
        return cache[removed]

    # invariant: `low` removals feasible (0 = the stage-1 feasible set),
    # `high` removals infeasible (L removals leave nobody to serve the users)
    low, high = 0, L
    while high - low > 1:
        mid = (low + high) // 2
        out = probe(mid)
        if out.status is SolveStatus.SOLVER_FAILURE:
            return (_non_optimal(SolveStatus.SOLVER_FAILURE, out.active_set, runner,
                                 started, out.diagnostics), trace)
        if out.status is SolveStatus.OPTIMAL:
            low = mid
        else:
            high = mid
    final = probe(low)
    if final.status is not SolveStatus.OPTIMAL:
        return (_non_optimal(SolveStatus.SOLVER_FAILURE, final.active_set, runner,
                             started,
                             f"prefix {low} expected feasible: {final.diagnostics}"),
                trace)
    trace.extras["removed"] = low
    if validate_order:
        trace.extras["validation"] = _linear_scan_validation(
            order, cache, channel, qos, model, settings)
    trace.steps.append(TraceStep(2, final.active_set, "select", "optimal",
                                 final.network_power, runner.socp_count))
    return _finish(final, runner, started), trace


def _linear_scan_validation(order, cache, channel, qos, model, settings) -> dict:
    """Feasibility of every removal prefix, reusing cached probes; reports
    whether the sequence is monotone (feasible prefix, then infeasible)."""
    L = channel.num_rrh
    extra_solves = 0
    feasible = []
    for removed in range(L):
        if removed in cache:
            out = cache[removed]
        else:
            out = solve_power_min(_prefix_active(order, removed, L),
                                  channel, qos, model, settings)
            extra_solves += 1
        feasible.append(out.status is SolveStatus.OPTIMAL)
    first_bad = next((i for i, ok in enumerate(feasible) if not ok), L)
    monotone = all(not ok for ok in feasible[first_bad:])
    return {"prefix_feasible": tuple(feasible),
            "monotone": monotone,
            "max_feasible_prefix": first_bad - 1,
            "socp_count": extra_solves}


def bisection_group_sparse(channel: ChannelState, qos: QoSSpec, model: PowerModel,
                           settings: SolverSettings | None = None,
                           validate_order: bool = False) -> tuple:
    """Group-sparse selection with the homogeneous-bound weights and the
    parameter-aware switch-off ordering."""
    weights = homogeneous_bound_weights(model)

    def ordering(w_hat):
        return ordering_scores(w_hat, channel, model)

    return _prefix_bisection("bisection", weights, ordering, channel, qos, model,
                             settings, validate_order)


def sparsity_pattern_baseline(channel: ChannelState, qos: QoSSpec, model: PowerModel,
                              settings: SolverSettings | None = None,
                              validate_order: bool = False) -> tuple:
    """Baseline pipeline: unweighted group norm and beamformer-only ordering."""
    weights = GroupWeights.uniform(channel.num_rrh)

    def ordering(w_hat):
        return sparsity_ordering_scores(w_hat)

    return _prefix_bisection("sp", weights, ordering, channel, qos, model,
                             settings, validate_order)


def _conservative_scan(order, runner: _Runner, trace: AlgorithmTrace,
                       started: float) -> tuple:
    """Solve the power problem for growing removal prefixes, stopping at the
    first infeasibility, and keep the best stage (earliest wins ties).

    Returns (winner, failure_outcome): exactly one is not None.
    """
    L = runner.channel.num_rrh
    stages = []
    for removed in range(L):
        active = _prefix_active(order, removed, L)
        out = runner.power_min(active)
        trace.steps.append(TraceStep(2, active, "probe", out.status.value,
                                     out.network_power, runner.socp_count))
        if out.status is SolveStatus.SOLVER_FAILURE:
            return None, _non_optimal(SolveStatus.SOLVER_FAILURE, active, runner,
                                      started, out.diagnostics)
        if out.status is SolveStatus.INFEASIBLE:
            break
        stages.append(out)
    if not stages:
        return None, _non_optimal(
            SolveStatus.SOLVER_FAILURE, range(L), runner, started,
            "full-set probe infeasible although the relaxed stage was feasible")
    winner = stages[0]
    for out in stages[1:]:
        if out.network_power < winner.network_power:
            winner = out
    return winner, None


def iterative_group_sparse(channel: ChannelState, qos: QoSSpec, model: PowerModel,
                           settings: SolverSettings | None = None) -> tuple:
    """Reweighted group-sparse selection.

    Stage 1 starts from channel-aware weights and reweights the group norm
    from the previous iterate (at most L solves; stops early once the
    log-sum objective settles).  Stage 2 orders RRHs by the switch-off
    priority; stage 3 scans removal prefixes conservatively and returns the
    best visited stage.
    """
    started = time.perf_counter()
    L = channel.num_rrh
    runner = _Runner(channel, qos, model, settings)
    trace = AlgorithmTrace("iterative")
    full = tuple(range(L))
    weights = initial_weights(channel, model)
    sol = runner.weighted(weights)
    trace.steps.append(TraceStep(0, full, "solve", sol.status.value,
                                 sol.objective, runner.socp_count))
    if sol.status is SolveStatus.SOLVER_FAILURE:
        return (_non_optimal(SolveStatus.SOLVER_FAILURE, full, runner, started,
                             sol.diagnostics), trace)
    if sol.status is SolveStatus.INFEASIBLE:
        return (_non_optimal(SolveStatus.INFEASIBLE, full, runner, started,
                             "initial weighted problem infeasible"), trace)
    w = sol.beamformer
    # smoothing fixed from the first iterate's scale and held across iterations
    eps = max(1e-10, 1e-2 * float(np.max(w.group_norms())))
    f_history = [log_sum_penalty(w, model, eps)]
    for m in range(1, L):
        weights = reweight(w, model, eps, iteration=m)
        sol = runner.weighted(weights)
        trace.steps.append(TraceStep(1, full, "solve", sol.status.value,
                                     sol.objective, runner.socp_count))
        if sol.status is not SolveStatus.OPTIMAL:
            # the feasible set never changes between iterations, so anything
            # but optimal here is a kernel inconsistency
            return (_non_optimal(SolveStatus.SOLVER_FAILURE, full, runner, started,
                                 f"reweighted solve {m}: {sol.diagnostics}"), trace)
        w = sol.beamformer
        f_history.append(log_sum_penalty(w, model, eps))
        if abs(f_history[-1] - f_history[-2]) <= \
                REWEIGHT_CONVERGENCE_RTOL * max(abs(f_history[-2]), 1e-12):
            break
    theta, order = ordering_scores(w, channel, model)
    trace.extras.update({"f_history": tuple(f_history), "eps": eps,
                         "theta": theta, "order": order})
    winner, failure = _conservative_scan(order, runner, trace, started)
    if failure is not None:
        return failure, trace
    trace.steps.append(TraceStep(3, winner.active_set, "select", "optimal",
                                 winner.network_power, runner.socp_count))
    return _finish(winner, runner, started), trace


def relaxed_selection_deflation(channel: ChannelState, qos: QoSSpec,
                                model: PowerModel,
                                settings: SolverSettings | None = None) -> tuple:
    """Deflation ordered by the continuous relaxation's activity levels.

    One relaxation solve yields z_l in [0, 1] per RRH; RRHs are deflated in
    ascending z order through the same conservative prefix scan as the
    reweighted pipeline.  Linear SOCP count.
    """
    started = time.perf_counter()
    L = channel.num_rrh
    runner = _Runner(channel, qos, model, settings)
    trace = AlgorithmTrace("rminlp")
    full = tuple(range(L))
    rel = runner.relaxation()
    trace.steps.append(TraceStep(0, full, "relax", rel.status.value,
                                 rel.objective, runner.socp_count))
    if rel.status is SolveStatus.SOLVER_FAILURE:
        return (_non_optimal(SolveStatus.SOLVER_FAILURE, full, runner, started,
                             rel.diagnostics), trace)
    if rel.status is SolveStatus.INFEASIBLE:
        return (_non_optimal(SolveStatus.INFEASIBLE, full, runner, started,
                             "selection relaxation infeasible"), trace)
    order = np.argsort(rel.activity, kind="stable")
    trace.extras.update({"activity": rel.activity, "order": order})
    winner, failure = _conservative_scan(order, runner, trace, started)
    if failure is not None:
        return failure, trace
    trace.steps.append(TraceStep(3, winner.active_set, "select", "optimal",
                                 winner.network_power, runner.socp_count))
    return _finish(winner, runner, started), trace


def run_algorithm(name: str, channel: ChannelState, qos: QoSSpec, model: PowerModel,
                  settings: SolverSettings | None = None,
                  exhaustive_max_rrh: int = 12) -> tuple:
    """Dispatch by registry name; returns (outcome, trace-or-None)."""
    if name == "cb":
        return coordinated_beamforming(channel, qos, model, settings), None
    if name == "exhaustive":
        return exhaustive_search(channel, qos, model, settings,
                                 max_rrh=exhaustive_max_rrh)
    if name == "greedy":
        return greedy_selection(channel, qos, model, settings)
    if name == "bisection":
        return bisection_group_sparse(channel, qos, model, settings)
    if name == "iterative":
        return iterative_group_sparse(channel, qos, model, settings)
    if name == "sp":
        return sparsity_pattern_baseline(channel, qos, model, settings)
    if name == "rminlp":
        return relaxed_selection_deflation(channel, qos, model, settings)
    raise ValueError(f"unknown algorithm {name!r}; choose from {ALGORITHM_NAMES}")
