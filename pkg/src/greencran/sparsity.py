"""Group-sparsity functionals, penalty weights, and switch-off orderings.

The network power objective splits into an efficiency-weighted transmit term
T(w) and a support-dependent transport term F(w).  Its tightest convex
positively homogeneous lower bound is the weighted mixed l1/l2 norm

    Omega(w) = 2 sum_l sqrt(p_delta_l / eta_l) ||group l||,

whose dual norm, log-sum sharpening, and reweighting rules live here, along
with the priority scores deciding which RRHs to switch off first.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelState, channel_power_gains
from .model import Beamformer, PowerModel, support_transport_power, transmit_power


@dataclass(frozen=True)
class GroupWeights:
    """Nonnegative per-group weights with a provenance tag."""

    values: np.ndarray
    provenance: str = "unweighted"

    def __post_init__(self):
        values = np.atleast_1d(np.asarray(self.values, dtype=float))
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if np.any(~np.isfinite(values)) or np.any(values < 0):
            raise ValueError("weights must be finite and nonnegative")

    def __len__(self) -> int:
        return self.values.size

    @classmethod
    def uniform(cls, num_rrh: int) -> "GroupWeights":
        return cls(np.ones(num_rrh), provenance="unweighted")


def mixed_norm(w: Beamformer, weights) -> float:
    """Weighted mixed l1/l2 norm: sum_l beta_l ||group l||."""
    beta = np.asarray(getattr(weights, "values", weights), dtype=float)
    return float(np.dot(beta, w.group_norms()))


def homogeneous_bound_weights(model: PowerModel) -> GroupWeights:
    """beta_l = sqrt(p_delta_l / eta_l): a zero-overhead RRH is never penalized.

    With these weights, 2 * mixed_norm(w, beta) is the tightest convex
    positively homogeneous lower bound of T(w) + F(w).
    """
    return GroupWeights(np.sqrt(model.p_delta / model.eta), provenance="homogeneous_bound")


def omega(w: Beamformer, model: PowerModel) -> float:
    """The convex lower bound 2 sum_l sqrt(p_delta_l/eta_l) ||group l||."""
    return 2.0 * mixed_norm(w, homogeneous_bound_weights(model))


def omega_dual(y: Beamformer, model: PowerModel) -> float:
    """Dual norm of omega: (1/2) max_l sqrt(eta_l / p_delta_l) ||y group l||."""
    if np.any(model.p_delta <= 0):
        raise ValueError("dual norm undefined when some p_delta is zero")
    norms = y.group_norms()
    return float(0.5 * np.max(np.sqrt(model.eta / model.p_delta) * norms))


def dual_pairing(w: Beamformer, y: Beamformer) -> float:
    """Bilinear pairing Re(sum_i w_i y_i) used with the dual norm."""
    return float(np.real(np.sum(w.aggregate() * y.aggregate())))


def aligned_dual(w: Beamformer, model: PowerModel) -> Beamformer:
    """Dual vector attaining pairing = omega(w): per nonzero group,
    y = 2 sqrt(p_delta/eta) conj(group) / ||group||."""
    blocks = []
    for l, b in enumerate(w.blocks):
        norm = np.linalg.norm(b)
        if norm > 0:
            blocks.append(2.0 * np.sqrt(model.p_delta[l] / model.eta[l]) * b.conj() / norm)
        else:
            blocks.append(np.zeros_like(b))
    return Beamformer(tuple(blocks))


def homogeneous_lower_bound(w: Beamformer, model: PowerModel) -> float:
    """Positively homogeneous bound 2 sqrt(T(w) * F(w)); sits between omega(w)
    and the network power split T(w) + F(w)."""
    return 2.0 * np.sqrt(transmit_power(w, model) * support_transport_power(w, model))


def log_sum_penalty(w: Beamformer, model: PowerModel, eps: float) -> float:
    """Sparsity-sharpened surrogate of the on/off transport cost:

        (2 / log(1 + 1/eps)) * sum_l sqrt(p_delta_l/eta_l) log(1 + ||group l||/eps)

    As eps -> 0 the value approaches 2 sum over nonzero groups of
    sqrt(p_delta_l/eta_l), the exact combinatorial count.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    lam = 2.0 / np.log1p(1.0 / eps)
    coeff = np.sqrt(model.p_delta / model.eta)
    return float(lam * np.sum(coeff * np.log1p(w.group_norms() / eps)))


def reweight(w_prev: Beamformer, model: PowerModel, eps: float,
             iteration: int | None = None) -> GroupWeights:
    """Next-iteration weights beta_l = sqrt(p_delta_l/eta_l) / (||group l|| + eps).

    Strong groups are de-emphasized; a vanished group gets the large but
    finite weight sqrt(p_delta_l/eta_l)/eps.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    beta = np.sqrt(model.p_delta / model.eta) / (w_prev.group_norms() + eps)
    tag = "reweighted" if iteration is None else f"reweighted[{iteration}]"
    return GroupWeights(beta, provenance=tag)


def initial_weights(channel: ChannelState, model: PowerModel) -> GroupWeights:
    """Channel-aware starting weights beta_l = sqrt(p_delta_l / (eta_l kappa_l)).

    RRHs with high transport overhead, low amplifier efficiency, or weak
    aggregate channel gain kappa_l are penalized more heavily.  An RRH with
    kappa_l = 0 is unreachable and must be excluded at scenario validation.
    """
    kappa = channel_power_gains(channel)
    if np.any(kappa <= 0):
        raise ValueError("channel power gain must be positive for every RRH")
    return GroupWeights(np.sqrt(model.p_delta / (model.eta * kappa)),
                        provenance="initial")


def _ascending_order(scores: np.ndarray) -> np.ndarray:
    # stable sort: ties resolved by ascending RRH index, for reproducibility
    return np.argsort(scores, kind="stable")


def ordering_scores(w_hat: Beamformer, channel: ChannelState,
                    model: PowerModel) -> tuple:
    """Switch-off priority scores

        theta_l = sqrt(kappa_l eta_l / p_delta_l) * (sum_k ||w_lk||)^(1/2)

    (note the inner sum is of per-user norms, not squared norms) together
    with the ascending permutation: smaller theta switches off earlier.
    """
    if np.any(model.p_delta <= 0):
        raise ValueError("ordering undefined when some p_delta is zero")
    kappa = channel_power_gains(channel)
    gains = np.array([w_hat.per_user_norms(l).sum() for l in range(w_hat.num_rrh)])
    theta = np.sqrt(kappa * model.eta / model.p_delta) * np.sqrt(gains)
    return theta, _ascending_order(theta)


def sparsity_ordering_scores(w_hat: Beamformer) -> tuple:
    """Baseline priority using the beamformer alone: theta_l = (sum_k ||w_lk||)^(1/2)."""
    gains = np.array([w_hat.per_user_norms(l).sum() for l in range(w_hat.num_rrh)])
    theta = np.sqrt(gains)
    return theta, _ascending_order(theta)
