"""Domain types and the Cloud-RAN network power model.

All quantities are kept in watts and meters internally.  dB / dBm values
only appear at I/O boundaries through the conversion helpers below.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

# Pico-class RRH and PON transport-link power constants [W].
DEFAULT_ETA = 4.0            # RF power amplifier drain efficiency
DEFAULT_P_MAX = 1.0          # per-RRH transmit power budget
DEFAULT_P_OLT = 20.0         # optical line terminal (always on)
DEFAULT_P_ACTIVE_RRH = 6.8
DEFAULT_P_SLEEP_RRH = 4.3
DEFAULT_P_ACTIVE_TL = 3.85
DEFAULT_P_SLEEP_TL = 0.75

# Relative threshold deciding whether a beamformer group counts as "on":
# group l is in the support iff ||w_l|| > GROUP_SUPPORT_RTOL * max(1, ||w||).
GROUP_SUPPORT_RTOL = 1e-6


def db_to_linear(x_db):
    """Power ratio from dB."""
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def linear_to_db(x):
    """dB from a positive power ratio."""
    return 10.0 * np.log10(np.asarray(x, dtype=float))


def dbm_to_watts(x_dbm):
    """Watts from dBm."""
    return 10.0 ** ((np.asarray(x_dbm, dtype=float) - 30.0) / 10.0)


def watts_to_dbm(p):
    """dBm from watts."""
    return 10.0 * np.log10(np.asarray(p, dtype=float)) + 30.0


def _frozen_array(x, dtype=float) -> np.ndarray:
    a = np.array(x, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PowerModel:
    """Per-RRH power parameters.

    ``p_delta`` is the active-minus-sleep power of an RRH together with its
    transport link; it is the only non-transmit quantity that depends on the
    on/off decision, so network-power bookkeeping is expressed through it.
    The raw active/sleep components are optional and, when present, must be
    consistent with ``p_delta``.
    """

    eta: np.ndarray      # amplifier drain efficiency, dimensionless, > 0
    p_max: np.ndarray    # transmit power budget [W], > 0
    p_delta: np.ndarray  # active-minus-sleep RRH + link power [W], >= 0
    p_olt: float = DEFAULT_P_OLT
    p_sleep_rrh: np.ndarray | None = None
    p_sleep_tl: np.ndarray | None = None
    p_active_rrh: np.ndarray | None = None
    p_active_tl: np.ndarray | None = None

    def __post_init__(self):
        eta = _frozen_array(np.atleast_1d(self.eta))
        p_max = _frozen_array(np.broadcast_to(self.p_max, eta.shape))
        p_delta = _frozen_array(np.broadcast_to(self.p_delta, eta.shape))
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "p_max", p_max)
        object.__setattr__(self, "p_delta", p_delta)
        if np.any(eta <= 0):
            raise ValueError("drain efficiency eta must be positive")
        if np.any(p_max <= 0):
            raise ValueError("transmit budget p_max must be positive")
        if np.any(p_delta < 0):
            raise ValueError("active-minus-sleep power p_delta must be >= 0")
        components = ("p_sleep_rrh", "p_sleep_tl", "p_active_rrh", "p_active_tl")
        given = [getattr(self, name) for name in components]
        if any(c is not None for c in given):
            if any(c is None for c in given):
                raise ValueError("supply all four sleep/active components or none")
            arrays = [_frozen_array(np.broadcast_to(c, eta.shape)) for c in given]
            for name, a in zip(components, arrays):
                object.__setattr__(self, name, a)
            p_s_rrh, p_s_tl, p_a_rrh, p_a_tl = arrays
            implied = (p_a_rrh + p_a_tl) - (p_s_rrh + p_s_tl)
            if not np.allclose(implied, p_delta, rtol=1e-9, atol=1e-9):
                raise ValueError("p_delta inconsistent with active/sleep components")

    @property
    def num_rrh(self) -> int:
        return self.eta.size

    @classmethod
    def uniform(cls, num_rrh: int, eta: float = DEFAULT_ETA,
                p_max: float = DEFAULT_P_MAX, p_delta=None) -> "PowerModel":
        """Model with identical amplifier/budget parameters on every RRH.

        ``p_delta`` may be a scalar or a per-RRH sequence; by default it is
        derived from the pico-RRH + PON constants (5.6 W per RRH).
        """
        eta_arr = np.full(num_rrh, float(eta))
        if p_delta is None:
            return cls.from_components(
                eta=eta_arr,
                p_max=np.full(num_rrh, float(p_max)),
                p_active_rrh=np.full(num_rrh, DEFAULT_P_ACTIVE_RRH),
                p_active_tl=np.full(num_rrh, DEFAULT_P_ACTIVE_TL),
                p_sleep_rrh=np.full(num_rrh, DEFAULT_P_SLEEP_RRH),
                p_sleep_tl=np.full(num_rrh, DEFAULT_P_SLEEP_TL),
            )
        return cls(eta=eta_arr, p_max=np.full(num_rrh, float(p_max)),
                   p_delta=np.broadcast_to(np.asarray(p_delta, dtype=float), (num_rrh,)))

    @classmethod
    def from_components(cls, eta, p_max, p_active_rrh, p_active_tl,
                        p_sleep_rrh, p_sleep_tl, p_olt: float = DEFAULT_P_OLT) -> "PowerModel":
        """Build the model from raw active/sleep powers, deriving p_delta."""
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        shape = eta.shape
        p_a_rrh = np.broadcast_to(np.asarray(p_active_rrh, dtype=float), shape)
        p_a_tl = np.broadcast_to(np.asarray(p_active_tl, dtype=float), shape)
        p_s_rrh = np.broadcast_to(np.asarray(p_sleep_rrh, dtype=float), shape)
        p_s_tl = np.broadcast_to(np.asarray(p_sleep_tl, dtype=float), shape)
        p_delta = (p_a_rrh + p_a_tl) - (p_s_rrh + p_s_tl)
        return cls(eta=eta, p_max=np.broadcast_to(np.asarray(p_max, dtype=float), shape),
                   p_delta=p_delta, p_olt=float(p_olt),
                   p_sleep_rrh=p_s_rrh, p_sleep_tl=p_s_tl,
                   p_active_rrh=p_a_rrh, p_active_tl=p_a_tl)


@dataclass(frozen=True)
class NetworkInstance:
    """Topology of one network realization.

    RRHs and users live in the square [-region, region]^2 (meters).
    """

    antennas: np.ndarray        # per-RRH antenna count
    rrh_positions: np.ndarray   # (L, 2) [m]
    user_positions: np.ndarray  # (K, 2) [m]
    region: float               # half side length of the square region [m]
    power: PowerModel

    def __post_init__(self):
        antennas = _frozen_array(np.atleast_1d(self.antennas), dtype=int)
        rrh_pos = _frozen_array(np.atleast_2d(self.rrh_positions))
        user_pos = _frozen_array(np.atleast_2d(self.user_positions))
        object.__setattr__(self, "antennas", antennas)
        object.__setattr__(self, "rrh_positions", rrh_pos)
        object.__setattr__(self, "user_positions", user_pos)
        if antennas.size < 1 or user_pos.shape[0] < 1:
            raise ValueError("need at least one RRH and one user")
        if np.any(antennas < 1):
            raise ValueError("every RRH needs at least one antenna")
        if rrh_pos.shape != (antennas.size, 2) or user_pos.shape[1] != 2:
            raise ValueError("positions must be (n, 2) arrays")
        if self.region <= 0:
            raise ValueError("region half-width must be positive")
        bound = self.region * (1 + 1e-12)
        if np.any(np.abs(rrh_pos) > bound) or np.any(np.abs(user_pos) > bound):
            raise ValueError("positions must lie inside the declared region")
        if self.power.num_rrh != antennas.size:
            raise ValueError("power model size does not match number of RRHs")

    @property
    def num_rrh(self) -> int:
        return self.antennas.size

    @property
    def num_users(self) -> int:
        return self.user_positions.shape[0]


@dataclass(frozen=True)
class QoSSpec:
    """Per-user target SINRs (linear) and noise powers [W]."""

    gamma: np.ndarray
    sigma2: np.ndarray

    def __post_init__(self):
        gamma = _frozen_array(np.atleast_1d(self.gamma))
        sigma2 = _frozen_array(np.broadcast_to(self.sigma2, gamma.shape))
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "sigma2", sigma2)
        if np.any(gamma <= 0) or np.any(sigma2 <= 0):
            raise ValueError("SINR targets and noise powers must be positive")

    @property
    def num_users(self) -> int:
        return self.gamma.size

    @classmethod
    def from_db(cls, sinr_db, noise_dbm, num_users: int) -> "QoSSpec":
        """Targets from a common SINR in dB and a noise power in dBm."""
        gamma = np.full(num_users, float(db_to_linear(sinr_db)))
        sigma2 = np.full(num_users, float(dbm_to_watts(noise_dbm)))
        return cls(gamma=gamma, sigma2=sigma2)


@dataclass(frozen=True)
class Beamformer:
    """Aggregate transmit beamformer with its per-RRH group structure.

    ``blocks[l]`` is the (K, N_l) complex array of coefficients RRH l applies
    for the K users; flattening it row-major yields the group vector
    [w_l1; ...; w_lK] of length K*N_l.
    """

    blocks: tuple

    def __post_init__(self):
        blocks = tuple(_frozen_array(b, dtype=complex) for b in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        if not blocks:
            raise ValueError("beamformer needs at least one group")
        k = blocks[0].shape[0]
        for b in blocks:
            if b.ndim != 2 or b.shape[0] != k:
                raise ValueError("every block must be (K, N_l) with a common K")

    @property
    def num_rrh(self) -> int:
        return len(self.blocks)

    @property
    def num_users(self) -> int:
        return self.blocks[0].shape[0]

    @classmethod
    def zeros(cls, antennas, num_users: int) -> "Beamformer":
        antennas = np.atleast_1d(np.asarray(antennas, dtype=int))
        return cls(tuple(np.zeros((num_users, n), dtype=complex) for n in antennas))

    def group_vector(self, l: int) -> np.ndarray:
        """Concatenation [w_l1; ...; w_lK] for RRH l."""
        return self.blocks[l].ravel()

    def group_norms(self) -> np.ndarray:
        return np.array([np.linalg.norm(b) for b in self.blocks])

    def per_user_norms(self, l: int) -> np.ndarray:
        """||w_lk|| for each user k at RRH l."""
        return np.linalg.norm(self.blocks[l], axis=1)

    def aggregate(self) -> np.ndarray:
        """Full coefficient vector, groups concatenated in RRH order."""
        return np.concatenate([b.ravel() for b in self.blocks])

    def norm(self) -> float:
        return float(np.linalg.norm(self.aggregate()))

    def support(self, rtol: float = GROUP_SUPPORT_RTOL) -> tuple:
        """Indices of groups whose norm exceeds the relative threshold."""
        cut = rtol * max(1.0, self.norm())
        return tuple(l for l, g in enumerate(self.group_norms()) if g > cut)

    def scaled(self, factor: complex) -> "Beamformer":
        return Beamformer(tuple(factor * b for b in self.blocks))


class SolveStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    SOLVER_FAILURE = "failure"


@dataclass(frozen=True)
class SolveOutcome:
    """Universal return of every solver/algorithm run.

    Powers are present exactly when the run is optimal; infeasibility is a
    status, never an infinite power value.
    """

    status: SolveStatus
    active_set: tuple = ()
    beamformer: Beamformer | None = None
    transmit_power: float | None = None   # T(w) = sum_l sum_k ||w_lk||^2 / eta_l [W]
    network_power: float | None = None    # T(w) + sum_{l active} p_delta_l [W]
    socp_count: int = 0
    wall_time: float = 0.0                # [s]
    diagnostics: str = ""

    def __post_init__(self):
        if self.status is not SolveStatus.OPTIMAL:
            if self.network_power is not None or self.transmit_power is not None:
                raise ValueError("powers must be absent for non-optimal outcomes")
        object.__setattr__(self, "active_set", tuple(int(l) for l in self.active_set))


def rrh_power(p_out: float, l: int, model: PowerModel) -> float:
    """Consumed power of RRH l radiating p_out watts.

    Linear amplifier model when transmitting; sleep floor when silent.  The
    discontinuity at p_out = 0 is intentional: waking the RRH costs the full
    active overhead.
    """
    if p_out < 0:
        raise ValueError("transmit power must be nonnegative")
    if model.p_active_rrh is None:
        raise ValueError("power model lacks active/sleep components")
    if p_out > 0:
        return float(model.p_active_rrh[l] + p_out / model.eta[l])
    return float(model.p_sleep_rrh[l])


def transport_power(active_flags, model: PowerModel) -> float:
    """Total transport network power for the given link on/off pattern."""
    flags = np.asarray(active_flags, dtype=bool)
    if flags.size != model.num_rrh:
        raise ValueError("need one flag per transport link")
    if model.p_active_tl is None:
        raise ValueError("power model lacks active/sleep components")
    return float(model.p_olt + np.where(flags, model.p_active_tl, model.p_sleep_tl).sum())


def transmit_power(w: Beamformer, model: PowerModel) -> float:
    """Efficiency-weighted transmit power T(w) = sum_l sum_k ||w_lk||^2 / eta_l."""
    norms2 = np.array([np.sum(np.abs(b) ** 2) for b in w.blocks])
    return float(np.sum(norms2 / model.eta))


def network_power(active_set, w: Beamformer, model: PowerModel) -> float:
    """Network power of operating `active_set` with beamformer w.

    Sums the efficiency-weighted transmit power and the active-minus-sleep
    overhead of the active RRHs; the constant OLT and sleep-floor terms are
    omitted since they do not depend on the design.
    """
    active = sorted({int(l) for l in active_set})
    if any(l < 0 or l >= w.num_rrh for l in active):
        raise ValueError("active set index out of range")
    inactive = set(range(w.num_rrh)) - set(active)
    for l in inactive:
        if np.any(w.blocks[l] != 0):
            raise ValueError(f"nonzero beamformer coefficients on inactive RRH {l}")
    total = 0.0
    for l in active:
        total += np.sum(np.abs(w.blocks[l]) ** 2) / model.eta[l]
        total += model.p_delta[l]
    return float(total)


def support_transport_power(w: Beamformer, model: PowerModel) -> float:
    """Transport overhead implied by the support of w:
    sum of p_delta over groups with any coefficient above the support threshold."""
    return float(sum(model.p_delta[l] for l in w.support()))
