"""Shared builders for the test suite."""

import numpy as np

from greencran import (Beamformer, ChannelParams, ChannelState, PowerModel,
                       QoSSpec, generate_channel, generate_scenario)


def realistic_instance(seed, num_rrh, num_users, antennas=2, region=800.0,
                       p_delta=None, sinr_db=2.0, noise_dbm=-102.0):
    """One seeded (channel, qos, model) triple with the standard propagation
    parameters; returns them ready for any algorithm."""
    rng = np.random.default_rng(seed)
    model = PowerModel.uniform(num_rrh, p_delta=p_delta)
    instance = generate_scenario(region, num_rrh, num_users, antennas, rng,
                                 power=model)
    chan = generate_channel(instance, ChannelParams(), rng)
    qos = QoSSpec.from_db(sinr_db, noise_dbm, num_users)
    return chan, qos, model


def unit_instance(seed, num_rrh, num_users, antennas=2, sinr_db=2.0,
                  p_max=1e6, eta=4.0, p_delta=None):
    """Instance in normalized units: h ~ CN(0, I), sigma^2 = 1, generous
    budgets.  Handy for closed-form and oracle comparisons."""
    rng = np.random.default_rng(seed)
    antennas = np.broadcast_to(np.asarray(antennas, dtype=int), (num_rrh,))
    blocks = tuple(
        (rng.standard_normal((num_users, n)) + 1j * rng.standard_normal((num_users, n)))
        / np.sqrt(2.0)
        for n in antennas)
    chan = ChannelState(blocks)
    if p_delta is None:
        p_delta = 5.6
    model = PowerModel(eta=np.full(num_rrh, eta), p_max=np.full(num_rrh, p_max),
                       p_delta=np.broadcast_to(np.asarray(p_delta, dtype=float),
                                               (num_rrh,)))
    qos = QoSSpec(gamma=np.full(num_users, 10.0 ** (sinr_db / 10.0)),
                  sigma2=np.ones(num_users))
    return chan, qos, model


def random_beamformer(rng, antennas, num_users, zero_prob=0.0):
    blocks = []
    for n in antennas:
        b = (rng.standard_normal((num_users, n))
             + 1j * rng.standard_normal((num_users, n)))
        if zero_prob and rng.random() < zero_prob:
            b = np.zeros_like(b)
        blocks.append(b)
    return Beamformer(tuple(blocks))
