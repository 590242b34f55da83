"""Cone-program builders and the SOCP solver behind every algorithm.

Problems are stated in the standard conic form

    minimize    c' x
    subject to  h - G x  in  K,

where K is a product of nonnegative rays followed by second-order cones
(rows [t; u] with ||u|| <= t).  Complex data is realified: each complex
coefficient becomes an interleaved (re, im) pair of variables, and each
complex linear functional contributes separate real/imaginary rows.

The solver kernel is pluggable behind :func:`solve_socp`; the default is
Clarabel, a homogeneous self-dual interior-point solver that returns a
separating certificate on primal infeasibility, so infeasible programs are
distinguished from numerical failures.
"""

from __future__ import annotations

import io
import time
from dataclasses import dataclass, field

import clarabel
import numpy as np
import scipy.sparse as sp

from .channel import ChannelState
from .model import (Beamformer, PowerModel, QoSSpec, SolveOutcome, SolveStatus,
                    network_power, transmit_power)


@dataclass(frozen=True)
class SolverSettings:
    feas_tol: float = 1e-8     # primal/dual feasibility tolerance
    gap_tol: float = 1e-8      # absolute and relative duality-gap tolerance
    max_iters: int = 200
    cert_tol: float = 1e-6     # residual bound for infeasibility certificates

    def __post_init__(self):
        if min(self.feas_tol, self.gap_tol, self.cert_tol) <= 0 or self.max_iters <= 0:
            raise ValueError("solver tolerances and iteration limit must be positive")


@dataclass(frozen=True)
class ConeBlock:
    kind: str    # "nonneg" | "soc"
    dim: int
    label: tuple  # origin of the block, e.g. ("sinr", k) or ("rrh_power", l)


@dataclass(frozen=True)
class ConicProblem:
    num_vars: int
    objective: np.ndarray          # c
    g_matrix: sp.csc_matrix        # G
    offsets: np.ndarray            # h
    cones: tuple                   # ConeBlock sequence; nonneg blocks first
    notes: dict = field(default_factory=dict)  # decode metadata

    def __post_init__(self):
        seen_soc = False
        for block in self.cones:
            if block.kind == "soc":
                seen_soc = True
            elif block.kind == "nonneg":
                if seen_soc:
                    raise ValueError("nonneg blocks must precede soc blocks")
            else:
                raise ValueError(f"unknown cone kind {block.kind!r}")
        total = sum(b.dim for b in self.cones)
        if total != self.g_matrix.shape[0] or total != self.offsets.size:
            raise ValueError("cone dimensions inconsistent with the affine map")
        if self.g_matrix.shape[1] != self.num_vars or self.objective.size != self.num_vars:
            raise ValueError("variable count inconsistent with the affine map")

    def dump(self, stream) -> None:
        """Write a plain-text rendering for cross-checks with external solvers.

        Format: a `conic-problem v1` header; one `cone kind dim label` line
        per block; the objective and offset vectors; then the sparse matrix
        as `row col value` triplets (%.17g, round-trip exact).
        """
        coo = self.g_matrix.tocoo()
        stream.write("conic-problem v1\n")
        stream.write(f"vars {self.num_vars}\n")
        stream.write(f"rows {self.offsets.size}\n")
        stream.write(f"cones {len(self.cones)}\n")
        for block in self.cones:
            label = ":".join(str(part) for part in block.label)
            stream.write(f"cone {block.kind} {block.dim} {label}\n")
        stream.write("objective\n")
        stream.write(" ".join("%.17g" % v for v in self.objective) + "\n")
        stream.write("offsets\n")
        stream.write(" ".join("%.17g" % v for v in self.offsets) + "\n")
        stream.write(f"matrix {coo.nnz}\n")
        order = np.lexsort((coo.col, coo.row))
        for idx in order:
            stream.write("%d %d %.17g\n" % (coo.row[idx], coo.col[idx], coo.data[idx]))

    def dumps(self) -> str:
        buf = io.StringIO()
        self.dump(buf)
        return buf.getvalue()


class _ConeBuilder:
    """Accumulates rows of (h - Gx) and closes them into labeled cone blocks."""

    def __init__(self, num_vars: int):
        self.num_vars = num_vars
        self._rows, self._cols, self._vals = [], [], []
        self._h = []
        self._cones = []
        self._mark = 0

    @property
    def row_count(self) -> int:
        return len(self._h)

    def row(self, entries=(), offset: float = 0.0) -> None:
        r = len(self._h)
        for col, val in entries:
            if val != 0.0:
                self._rows.append(r)
                self._cols.append(col)
                self._vals.append(float(val))
        self._h.append(float(offset))

    def close(self, kind: str, label: tuple) -> None:
        dim = len(self._h) - self._mark
        if dim <= 0:
            raise ValueError("empty cone block")
        self._cones.append(ConeBlock(kind=kind, dim=dim, label=tuple(label)))
        self._mark = len(self._h)

    def finish(self, objective, notes: dict) -> ConicProblem:
        g = sp.coo_matrix((self._vals, (self._rows, self._cols)),
                          shape=(len(self._h), self.num_vars)).tocsc()
        return ConicProblem(num_vars=self.num_vars,
                            objective=np.asarray(objective, dtype=float),
                            g_matrix=g,
                            offsets=np.asarray(self._h, dtype=float),
                            cones=tuple(self._cones),
                            notes=dict(notes))


@dataclass(frozen=True)
class SocpResult:
    status: SolveStatus
    x: np.ndarray | None = None
    objective: float | None = None
    dual_objective: float | None = None    # duality gap witness on optimal exits
    certificate: np.ndarray | None = None  # dual-cone vector separating the problem
    reason: str = ""
    iterations: int = 0


def _kernel_settings(settings: SolverSettings) -> clarabel.DefaultSettings:
    s = clarabel.DefaultSettings()
    s.verbose = False
    # serial LDL backend: deterministic, and much faster than the default
    # pick on the dense-coupled SINR structure of these programs
    s.direct_solve_method = "qdldl"
    s.max_threads = 1
    s.tol_gap_abs = settings.gap_tol
    s.tol_gap_rel = settings.gap_tol
    s.tol_feas = settings.feas_tol
    s.max_iter = settings.max_iters
    return s


def solve_socp(problem: ConicProblem, settings: SolverSettings | None = None) -> SocpResult:
    """Solve a conic problem with the interior-point kernel.

    Optimal solutions satisfy the cone constraints within ``feas_tol`` and
    close the duality gap within ``gap_tol``; primal infeasibility is
    reported together with the separating certificate, checked against
    ``cert_tol`` so that ill-converged runs surface as failures instead.
    Reduced-accuracy terminations are failures, never optima.
    """
    settings = settings or SolverSettings()
    cones = []
    for block in problem.cones:
        if block.kind == "nonneg":
            cones.append(clarabel.NonnegativeConeT(block.dim))
        else:
            cones.append(clarabel.SecondOrderConeT(block.dim))
    p_zero = sp.csc_matrix((problem.num_vars, problem.num_vars))
    try:
        solver = clarabel.DefaultSolver(p_zero, problem.objective,
                                        problem.g_matrix.tocsc(), problem.offsets,
                                        cones, _kernel_settings(settings))
        sol = solver.solve()
    except BaseException as exc:  # the Rust kernel raises plain Exceptions
        return SocpResult(status=SolveStatus.SOLVER_FAILURE,
                          reason=f"kernel error: {exc}")
    status = sol.status
    iterations = int(sol.iterations)
    if status == clarabel.SolverStatus.Solved:
        return SocpResult(status=SolveStatus.OPTIMAL, x=np.asarray(sol.x),
                          objective=float(sol.obj_val),
                          dual_objective=float(sol.obj_val_dual),
                          iterations=iterations)
    if status == clarabel.SolverStatus.PrimalInfeasible:
        z = np.asarray(sol.z)
        # certificate: z in K*, G'z = 0, h'z = -1 (normalized by the kernel)
        residual = float(np.max(np.abs(problem.g_matrix.T @ z))) if z.size else np.inf
        pairing = float(problem.offsets @ z)
        if residual > settings.cert_tol or pairing > -0.5:
            return SocpResult(status=SolveStatus.SOLVER_FAILURE,
                              reason=f"infeasibility certificate residual {residual:.2e} "
                                     f"(h'z = {pairing:.2e}) fails the "
                                     f"{settings.cert_tol:.2e} check",
                              iterations=iterations)
        return SocpResult(status=SolveStatus.INFEASIBLE, certificate=z,
                          reason="primal infeasible with separating certificate",
                          iterations=iterations)
    if status in (clarabel.SolverStatus.DualInfeasible,
                  clarabel.SolverStatus.AlmostDualInfeasible):
        return SocpResult(status=SolveStatus.SOLVER_FAILURE,
                          reason="dual infeasible (objective unbounded below)",
                          iterations=iterations)
    return SocpResult(status=SolveStatus.SOLVER_FAILURE,
                      reason=f"kernel stopped with status {status}",
                      iterations=iterations)


def _group_layout(antennas, num_users: int, active) -> tuple:
    """Variable offsets of the realified beamformer groups for `active` RRHs.

    Returns (offsets dict l -> first var index, total width).  Within a group
    the coefficient (k, n) occupies indices offset + 2*(k*N_l + n) (+1 for the
    imaginary part), matching the row-major group vector [w_l1; ...; w_lK].
    """
    offsets = {}
    width = 0
    for l in active:
        offsets[l] = width
        width += 2 * num_users * int(antennas[l])
    return offsets, width


def _re_im_indices(offset: int, n_l: int, k: int, n: int) -> tuple:
    base = offset + 2 * (k * n_l + n)
    return base, base + 1


def _add_sinr_cones(builder: _ConeBuilder, channel: ChannelState, qos: QoSSpec,
                    active, offsets) -> None:
    """C1: sqrt(sum_{i != k} |h_k^H w_i|^2 + sigma_k^2) <= Re(h_k^H w_k)/sqrt(gamma_k).

    Rows are scaled by 1/sigma_k (an exact reformulation) so the cone data
    stays well conditioned despite path-loss magnitudes.
    """
    num_users = qos.num_users
    for k in range(num_users):
        scale = 1.0 / np.sqrt(qos.sigma2[k])
        inv_sqrt_gamma = 1.0 / np.sqrt(qos.gamma[k])
        # top row: Re(h_k^H w_k) / sqrt(gamma_k), noise-normalized
        entries = []
        for l in active:
            n_l = channel.blocks[l].shape[1]
            h = channel.blocks[l][k] * scale
            for n in range(n_l):
                i_re, i_im = _re_im_indices(offsets[l], n_l, k, n)
                entries.append((i_re, -h[n].real * inv_sqrt_gamma))
                entries.append((i_im, -h[n].imag * inv_sqrt_gamma))
        builder.row(entries, 0.0)
        for i in range(num_users):
            if i == k:
                continue
            re_entries, im_entries = [], []
            for l in active:
                n_l = channel.blocks[l].shape[1]
                h = channel.blocks[l][k] * scale
                for n in range(n_l):
                    i_re, i_im = _re_im_indices(offsets[l], n_l, i, n)
                    # Re(h^H w) = Re(h).Re(w) + Im(h).Im(w)
                    re_entries.append((i_re, -h[n].real))
                    re_entries.append((i_im, -h[n].imag))
                    # Im(h^H w) = Re(h).Im(w) - Im(h).Re(w)
                    im_entries.append((i_re, h[n].imag))
                    im_entries.append((i_im, -h[n].real))
            builder.row(re_entries, 0.0)
            builder.row(im_entries, 0.0)
        builder.row((), 1.0)  # normalized noise term
        builder.close("soc", ("sinr", k))


def _add_budget_cones(builder: _ConeBuilder, channel: ChannelState, qos: QoSSpec,
                      model: PowerModel, active, offsets) -> None:
    """C2: ||group l|| <= sqrt(P_l) for every active RRH."""
    for l in active:
        n_vars = 2 * qos.num_users * channel.blocks[l].shape[1]
        builder.row((), float(np.sqrt(model.p_max[l])))
        for j in range(n_vars):
            builder.row([(offsets[l] + j, -1.0)], 0.0)
        builder.close("soc", ("rrh_power", l))


def _add_quadratic_epigraphs(builder: _ConeBuilder, channel: ChannelState,
                             qos: QoSSpec, active, offsets, t_index) -> None:
    """t_l >= ||group l||^2 via the rotated-cone rows [t+1; 2w; t-1]."""
    for l in active:
        n_vars = 2 * qos.num_users * channel.blocks[l].shape[1]
        builder.row([(t_index[l], -1.0)], 1.0)
        for j in range(n_vars):
            builder.row([(offsets[l] + j, -2.0)], 0.0)
        builder.row([(t_index[l], -1.0)], -1.0)
        builder.close("soc", ("epigraph", l))


def _check_inputs(channel: ChannelState, qos: QoSSpec, model: PowerModel) -> None:
    if qos.num_users != channel.num_users:
        raise ValueError("QoS spec and channel disagree on the number of users")
    if model.num_rrh != channel.num_rrh:
        raise ValueError("power model and channel disagree on the number of RRHs")


def build_power_min(active_set, channel: ChannelState, qos: QoSSpec,
                    model: PowerModel) -> ConicProblem:
    """Transmit-power minimization over a fixed active RRH set.

    minimize sum_{l active} t_l / eta_l with t_l the squared group norm,
    subject to the per-user SINR cones and per-RRH budget cones, with
    beamformer variables only for the active RRHs.
    """
    _check_inputs(channel, qos, model)
    active = sorted({int(l) for l in active_set})
    if not active:
        raise ValueError("active set must be nonempty")
    if active[0] < 0 or active[-1] >= channel.num_rrh:
        raise ValueError("active set index out of range")
    offsets, width = _group_layout(channel.antennas, qos.num_users, active)
    t_index = {l: width + j for j, l in enumerate(active)}
    num_vars = width + len(active)
    builder = _ConeBuilder(num_vars)
    _add_sinr_cones(builder, channel, qos, active, offsets)
    _add_budget_cones(builder, channel, qos, model, active, offsets)
    _add_quadratic_epigraphs(builder, channel, qos, active, offsets, t_index)
    c = np.zeros(num_vars)
    for l in active:
        c[t_index[l]] = 1.0 / model.eta[l]
    return builder.finish(c, {"kind": "power_min", "active": tuple(active),
                              "antennas": tuple(channel.antennas),
                              "num_users": qos.num_users})


def _decode_groups(x: np.ndarray, antennas, num_users: int, active) -> Beamformer:
    """Beamformer from the realified solution, zero groups off the active set."""
    offsets, _ = _group_layout(antennas, num_users, active)
    blocks = []
    for l, n_l in enumerate(antennas):
        if l in offsets:
            seg = x[offsets[l]: offsets[l] + 2 * num_users * n_l]
            blocks.append((seg[0::2] + 1j * seg[1::2]).reshape(num_users, n_l))
        else:
            blocks.append(np.zeros((num_users, n_l), dtype=complex))
    return Beamformer(tuple(blocks))


def solve_power_min(active_set, channel: ChannelState, qos: QoSSpec,
                    model: PowerModel, settings: SolverSettings | None = None) -> SolveOutcome:
    """Solve the fixed-set power minimization and report the network power.

    On success the beamformer carries exact zero groups outside the active
    set, and network power adds the active RRHs' transport overhead to the
    efficiency-weighted transmit power.
    """
    start = time.perf_counter()
    problem = build_power_min(active_set, channel, qos, model)
    result = solve_socp(problem, settings)
    elapsed = time.perf_counter() - start
    active = problem.notes["active"]
    if result.status is not SolveStatus.OPTIMAL:
        return SolveOutcome(status=result.status, active_set=active,
                            socp_count=1, wall_time=elapsed, diagnostics=result.reason)
    w = _decode_groups(result.x, channel.antennas, qos.num_users, active)
    t_w = transmit_power(w, model)
    p_net = network_power(active, w, model)
    return SolveOutcome(status=SolveStatus.OPTIMAL, active_set=active, beamformer=w,
                        transmit_power=t_w, network_power=p_net,
                        socp_count=1, wall_time=elapsed)


def build_weighted_group_norm(weights, channel: ChannelState, qos: QoSSpec,
                              model: PowerModel) -> ConicProblem:
    """Weighted group-norm minimization over all RRHs.

    minimize sum_l beta_l ||group l|| subject to the full-set SINR and budget
    cones.  Groups with beta_l = 0 get no epigraph (their norm is free), and
    the weight vector is normalized to unit maximum inside the program --
    a pure rescaling of the objective that keeps the data well conditioned.
    """
    _check_inputs(channel, qos, model)
    beta = np.asarray(getattr(weights, "values", weights), dtype=float)
    if beta.shape != (channel.num_rrh,):
        raise ValueError("need one weight per RRH")
    if np.any(~np.isfinite(beta)) or np.any(beta < 0):
        raise ValueError("weights must be finite and nonnegative")
    if not np.any(beta > 0):
        raise ValueError("at least one weight must be positive")
    active = list(range(channel.num_rrh))
    offsets, width = _group_layout(channel.antennas, qos.num_users, active)
    penalized = [l for l in active if beta[l] > 0]
    r_index = {l: width + j for j, l in enumerate(penalized)}
    num_vars = width + len(penalized)
    builder = _ConeBuilder(num_vars)
    _add_sinr_cones(builder, channel, qos, active, offsets)
    _add_budget_cones(builder, channel, qos, model, active, offsets)
    for l in penalized:
        n_vars = 2 * qos.num_users * channel.blocks[l].shape[1]
        builder.row([(r_index[l], -1.0)], 0.0)
        for j in range(n_vars):
            builder.row([(offsets[l] + j, -1.0)], 0.0)
        builder.close("soc", ("group_norm", l))
    scale = float(np.max(beta))
    c = np.zeros(num_vars)
    for l in penalized:
        c[r_index[l]] = beta[l] / scale
    return builder.finish(c, {"kind": "weighted_group_norm",
                              "active": tuple(active),
                              "antennas": tuple(channel.antennas),
                              "num_users": qos.num_users,
                              "weights": tuple(beta)})


@dataclass(frozen=True)
class GroupNormSolution:
    status: SolveStatus
    beamformer: Beamformer | None = None
    objective: float | None = None  # unscaled sum_l beta_l ||group l||
    wall_time: float = 0.0
    diagnostics: str = ""


def solve_weighted_group_norm(weights, channel: ChannelState, qos: QoSSpec,
                              model: PowerModel,
                              settings: SolverSettings | None = None) -> GroupNormSolution:
    start = time.perf_counter()
    problem = build_weighted_group_norm(weights, channel, qos, model)
    result = solve_socp(problem, settings)
    elapsed = time.perf_counter() - start
    if result.status is not SolveStatus.OPTIMAL:
        return GroupNormSolution(status=result.status, wall_time=elapsed,
                                 diagnostics=result.reason)
    w = _decode_groups(result.x, channel.antennas, qos.num_users,
                       problem.notes["active"])
    beta = np.asarray(problem.notes["weights"])
    objective = float(np.dot(beta, w.group_norms()))
    return GroupNormSolution(status=SolveStatus.OPTIMAL, beamformer=w,
                             objective=objective, wall_time=elapsed)


def build_selection_relaxation(channel: ChannelState, qos: QoSSpec,
                               model: PowerModel) -> ConicProblem:
    """Continuous relaxation of the joint on/off selection problem.

    Each RRH gets an activity level z_l in [0, 1] scaling both its transport
    overhead in the objective and its usable budget:

        minimize sum_l (t_l / eta_l + p_delta_l z_l)
        s.t.     SINR cones over the full set,
                 ||group l||^2 <= z_l P_l,   0 <= z_l <= 1,
                 t_l >= ||group l||^2.

    The budget coupling subsumes the plain per-RRH cap since z_l <= 1.
    """
    _check_inputs(channel, qos, model)
    active = list(range(channel.num_rrh))
    offsets, width = _group_layout(channel.antennas, qos.num_users, active)
    L = channel.num_rrh
    t_index = {l: width + l for l in active}
    z_index = {l: width + L + l for l in active}
    num_vars = width + 2 * L
    builder = _ConeBuilder(num_vars)
    for l in active:  # nonneg rows first: z_l >= 0 and 1 - z_l >= 0
        builder.row([(z_index[l], -1.0)], 0.0)
        builder.row([(z_index[l], 1.0)], 1.0)
        builder.close("nonneg", ("activity_box", l))
    _add_sinr_cones(builder, channel, qos, active, offsets)
    for l in active:  # ||group||^2 <= z P via rows [zP+1; 2w; zP-1]
        n_vars = 2 * qos.num_users * channel.blocks[l].shape[1]
        p_l = float(model.p_max[l])
        builder.row([(z_index[l], -p_l)], 1.0)
        for j in range(n_vars):
            builder.row([(offsets[l] + j, -2.0)], 0.0)
        builder.row([(z_index[l], -p_l)], -1.0)
        builder.close("soc", ("scaled_budget", l))
    _add_quadratic_epigraphs(builder, channel, qos, active, offsets, t_index)
    c = np.zeros(num_vars)
    for l in active:
        c[t_index[l]] = 1.0 / model.eta[l]
        c[z_index[l]] = model.p_delta[l]
    return builder.finish(c, {"kind": "selection_relaxation",
                              "active": tuple(active),
                              "antennas": tuple(channel.antennas),
                              "num_users": qos.num_users,
                              "z_start": width + L})


@dataclass(frozen=True)
class RelaxationSolution:
    status: SolveStatus
    beamformer: Beamformer | None = None
    activity: np.ndarray | None = None  # z_l in [0, 1]
    objective: float | None = None
    wall_time: float = 0.0
    diagnostics: str = ""


def solve_selection_relaxation(channel: ChannelState, qos: QoSSpec,
                               model: PowerModel,
                               settings: SolverSettings | None = None) -> RelaxationSolution:
    start = time.perf_counter()
    problem = build_selection_relaxation(channel, qos, model)
    result = solve_socp(problem, settings)
    elapsed = time.perf_counter() - start
    if result.status is not SolveStatus.OPTIMAL:
        return RelaxationSolution(status=result.status, wall_time=elapsed,
                                  diagnostics=result.reason)
    w = _decode_groups(result.x, channel.antennas, qos.num_users,
                       problem.notes["active"])
    z_start = problem.notes["z_start"]
    z = result.x[z_start: z_start + channel.num_rrh].copy()
    return RelaxationSolution(status=SolveStatus.OPTIMAL, beamformer=w, activity=z,
                              objective=float(result.objective), wall_time=elapsed)


@dataclass(frozen=True)
class SolutionReport:
    """Residual report of a candidate beamformer against the constraints."""

    sinr: np.ndarray          # achieved per-user SINR (linear)
    sinr_ok: np.ndarray       # SINR_k >= gamma_k (1 - tol)
    rrh_transmit: np.ndarray  # per-RRH radiated power sum_k ||w_lk||^2 [W]
    power_ok: np.ndarray      # radiated power <= P_l (1 + tol)
    inactive_ok: bool         # groups outside the active set identically zero

    @property
    def passed(self) -> bool:
        return bool(np.all(self.sinr_ok) and np.all(self.power_ok) and self.inactive_ok)


def achieved_sinr(w: Beamformer, channel: ChannelState, qos: QoSSpec) -> np.ndarray:
    """Per-user SINR of beamformer w under the given channel and noise."""
    K = qos.num_users
    h_rows = np.stack([channel.aggregate(k) for k in range(K)])
    w_rows = np.stack([np.concatenate([b[k] for b in w.blocks]) for k in range(K)])
    cross = h_rows.conj() @ w_rows.T  # cross[k, i] = h_k^H w_i
    power = np.abs(cross) ** 2
    signal = np.diag(power)
    interference = power.sum(axis=1) - signal
    return signal / (interference + qos.sigma2)


def verify_solution(w: Beamformer, active_set, channel: ChannelState, qos: QoSSpec,
                    model: PowerModel, tol: float = 1e-6) -> SolutionReport:
    """Check a beamformer against the SINR targets, budgets, and support."""
    _check_inputs(channel, qos, model)
    sinr = achieved_sinr(w, channel, qos)
    sinr_ok = sinr >= qos.gamma * (1.0 - tol)
    rrh_transmit = np.array([np.sum(np.abs(b) ** 2) for b in w.blocks])
    power_ok = rrh_transmit <= model.p_max * (1.0 + tol)
    inactive = set(range(w.num_rrh)) - {int(l) for l in active_set}
    inactive_ok = all(not np.any(w.blocks[l] != 0) for l in inactive)
    return SolutionReport(sinr=sinr, sinr_ok=sinr_ok, rrh_transmit=rrh_transmit,
                          power_ok=power_ok, inactive_ok=inactive_ok)
