"""Random scenario and channel generation.

Channels follow the standard macro-cell model: distance-dependent path loss
of 148.1 + 37.6*log10(d_km) dB, log-normal shadowing, a fixed antenna gain,
and i.i.d. circularly-symmetric complex Gaussian small-scale fading.

Generation is pure given a seed, so trials can run concurrently with
disjoint sub-seeds and paired comparisons see bit-identical channels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import NetworkInstance, PowerModel, _frozen_array


@dataclass(frozen=True)
class ChannelParams:
    """Propagation parameters.

    Setting ``shadowing_sigma_db = 0`` removes shadowing; ``fading = False``
    replaces the small-scale coefficients with all-ones (deterministic
    channels for oracle tests).
    """

    pathloss_intercept_db: float = 148.1  # path loss at 1 km [dB]
    pathloss_slope_db: float = 37.6       # dB per decade of distance
    shadowing_sigma_db: float = 8.0       # std of the dB-domain shadowing
    antenna_gain_dbi: float = 9.0
    fading: bool = True

    def __post_init__(self):
        if self.pathloss_slope_db <= 0:
            raise ValueError("path-loss slope must be positive")
        if self.shadowing_sigma_db < 0:
            raise ValueError("shadowing sigma must be >= 0")


@dataclass(frozen=True)
class ChannelState:
    """Block channel {h_kl}; ``blocks[l]`` is the (K, N_l) complex array whose
    row k is the channel from RRH l to user k."""

    blocks: tuple

    def __post_init__(self):
        blocks = tuple(_frozen_array(b, dtype=complex) for b in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        if not blocks:
            raise ValueError("channel needs at least one RRH block")
        k = blocks[0].shape[0]
        for b in blocks:
            if b.ndim != 2 or b.shape[0] != k:
                raise ValueError("every block must be (K, N_l) with a common K")
            if not np.all(np.isfinite(b.view(float))):
                raise ValueError("channel entries must be finite")

    @property
    def num_rrh(self) -> int:
        return len(self.blocks)

    @property
    def num_users(self) -> int:
        return self.blocks[0].shape[0]

    @property
    def antennas(self) -> tuple:
        return tuple(b.shape[1] for b in self.blocks)

    def block(self, k: int, l: int) -> np.ndarray:
        """Channel vector h_kl of length N_l."""
        return self.blocks[l][k]

    def aggregate(self, k: int, rrhs=None) -> np.ndarray:
        """Concatenated channel of user k over the given RRH subset (all by default)."""
        if rrhs is None:
            rrhs = range(self.num_rrh)
        return np.concatenate([self.blocks[l][k] for l in rrhs])


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def path_loss_db(d_km, params: ChannelParams = ChannelParams()):
    """Path loss in dB at distance d (kilometers): intercept + slope*log10(d).

    Note the slope applies per decade, i.e. the model is base-10.
    """
    d = np.asarray(d_km, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    out = params.pathloss_intercept_db + params.pathloss_slope_db * np.log10(d)
    return float(out) if np.isscalar(d_km) else out


def generate_scenario(region: float, num_rrh: int, num_users: int, antennas,
                      seed, power: PowerModel | None = None) -> NetworkInstance:
    """Draw RRH and user positions i.i.d. uniform over [-region, region]^2.

    RRH positions are drawn before user positions, so scenarios with the same
    seed and a larger user count extend, rather than reshuffle, smaller ones.
    """
    if region <= 0:
        raise ValueError("region half-width must be positive")
    rng = _rng(seed)
    rrh_pos = rng.uniform(-region, region, size=(num_rrh, 2))
    user_pos = rng.uniform(-region, region, size=(num_users, 2))
    antennas = np.broadcast_to(np.asarray(antennas, dtype=int), (num_rrh,))
    if power is None:
        power = PowerModel.uniform(num_rrh)
    return NetworkInstance(antennas=antennas, rrh_positions=rrh_pos,
                           user_positions=user_pos, region=region, power=power)


def generate_channel(instance: NetworkInstance, params: ChannelParams,
                     seed) -> ChannelState:
    """Draw one channel realization for the given scenario.

    h_kl = 10^(-PL(d_kl)/20) * sqrt(gain * s_kl) * g_kl, with s_kl log-normal
    shadowing (10^(X/10), X ~ N(0, sigma^2) in dB) and g_kl ~ CN(0, I).
    Deterministic given the seed: shadowing is drawn first as a (K, L) block,
    then the fading blocks in RRH order.
    """
    rng = _rng(seed)
    L, K = instance.num_rrh, instance.num_users
    # (K, L) distances in km
    diff = instance.user_positions[:, None, :] - instance.rrh_positions[None, :, :]
    d_km = np.linalg.norm(diff, axis=2) / 1000.0
    loss_db = path_loss_db(d_km, params)
    amplitude = 10.0 ** (-loss_db / 20.0)
    gain = 10.0 ** (params.antenna_gain_dbi / 10.0)
    if params.shadowing_sigma_db > 0:
        shadow_db = rng.normal(0.0, params.shadowing_sigma_db, size=(K, L))
        shadow = 10.0 ** (shadow_db / 10.0)
    else:
        shadow = np.ones((K, L))
    blocks = []
    for l in range(L):
        n = int(instance.antennas[l])
        if params.fading:
            g = (rng.standard_normal((K, n)) + 1j * rng.standard_normal((K, n))) / np.sqrt(2.0)
        else:
            g = np.ones((K, n), dtype=complex)
        scale = amplitude[:, l] * np.sqrt(gain * shadow[:, l])
        blocks.append(scale[:, None] * g)
    return ChannelState(tuple(blocks))


def channel_power_gain(channel: ChannelState, l: int) -> float:
    """Aggregate channel power gain of RRH l: sum_k ||h_kl||^2."""
    if l < 0 or l >= channel.num_rrh:
        raise ValueError("RRH index out of range")
    return float(np.sum(np.abs(channel.blocks[l]) ** 2))


def channel_power_gains(channel: ChannelState) -> np.ndarray:
    """Per-RRH channel power gains as a length-L array."""
    return np.array([channel_power_gain(channel, l) for l in range(channel.num_rrh)])
