"""Semidefinite-relaxation reference solver for the fixed-set power problem.

This is an independent ground truth used by the validation suite: the
quadratically-constrained program is lifted to rank-relaxed Hermitian
matrices W_k = w_k w_k^H and solved as an SDP through cvxpy with a kernel
(cvxopt, or SCS as fallback) different from the one behind the SOCP path.
The relaxation is tight for this problem class, so on small instances its
optimal value must coincide with the SOCP optimum.
"""

from __future__ import annotations

import numpy as np
import cvxpy as cp

from .channel import ChannelState
from .model import PowerModel, QoSSpec


def sdr_power_min(active_set, channel: ChannelState, qos: QoSSpec,
                  model: PowerModel, solver: str | None = None) -> tuple:
    """Optimal efficiency-weighted transmit power of the relaxed program.

    Returns ``(status, value)`` with status in {"optimal", "infeasible",
    "failure"}; ``value`` is the minimum of sum_l sum_k ||w_lk||^2 / eta_l
    over the active set, or None when not optimal.
    """
    active = sorted({int(l) for l in active_set})
    if not active:
        raise ValueError("active set must be nonempty")
    K = qos.num_users
    sizes = [int(channel.blocks[l].shape[1]) for l in active]
    total = sum(sizes)
    starts = np.concatenate([[0], np.cumsum(sizes)])

    big_w = [cp.Variable((total, total), hermitian=True) for _ in range(K)]
    constraints = [w >> 0 for w in big_w]

    # noise-normalized channels: SINR constraints become ... >= 1
    h_rows = []
    for k in range(K):
        h = np.concatenate([channel.blocks[l][k] for l in active])
        h_rows.append(h / np.sqrt(qos.sigma2[k]))

    for k in range(K):
        q = np.outer(h_rows[k], h_rows[k].conj())
        expr = cp.real(cp.trace(q @ big_w[k])) / qos.gamma[k]
        for i in range(K):
            if i != k:
                expr = expr - cp.real(cp.trace(q @ big_w[i]))
        constraints.append(expr >= 1.0)

    weighted = 0
    for j, l in enumerate(active):
        sl = slice(int(starts[j]), int(starts[j + 1]))
        radiated_l = sum(cp.real(cp.trace(w[sl, sl])) for w in big_w)
        constraints.append(radiated_l <= float(model.p_max[l]))
        weighted = weighted + radiated_l / float(model.eta[l])

    problem = cp.Problem(cp.Minimize(weighted), constraints)
    attempts = [solver] if solver else ["CVXOPT", "SCS"]
    for chosen in attempts:
        try:
            if chosen == "CVXOPT":
                problem.solve(solver=cp.CVXOPT, abstol=1e-8, reltol=1e-8,
                              feastol=1e-8)
            elif chosen == "SCS":
                problem.solve(solver=cp.SCS, eps=1e-9, max_iters=200000)
            else:
                problem.solve(solver=chosen)
        except cp.error.SolverError:
            continue
        if problem.status in (cp.OPTIMAL, "optimal_inaccurate"):
            return "optimal", float(problem.value)
        if problem.status in (cp.INFEASIBLE, "infeasible_inaccurate"):
            return "infeasible", None
    return "failure", None
