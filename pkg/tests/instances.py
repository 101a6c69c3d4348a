"""Random feasible instances for property and acceptance tests."""

from __future__ import annotations

import numpy as np

from noma_opt.model import ClusterSpec, SystemParams
from oracles import min_power_recursion


def random_cluster(rng, size, ws_hz, subchannel=0, first_id=0, decades=6.0, max_rate_ratio=2.0):
    cnr = 10.0 ** rng.uniform(-1.0, decades - 1.0, size)
    while len(set(cnr.tolist())) < size:
        cnr = 10.0 ** rng.uniform(-1.0, decades - 1.0, size)
    r_min = rng.uniform(0.0, max_rate_ratio, size) * ws_hz
    return ClusterSpec(subchannel, tuple(range(first_id, first_id + size)), tuple(cnr), tuple(r_min))


def random_instance(rng, n_max=4, size_max=4, ws_hz=None, masks=True, p_circuit=None):
    """Clusters and params whose minimum demands fit with some slack.

    CNRs are log-uniform over six decades and ``R_min/W_s`` is uniform in
    ``[0, 2]``. Masks, when drawn, sit between 1.2x and 4x each cluster's
    minimum power; the total budget sits between 1.1x and 3x the summed
    minimum power and may leave every mask unreachable.
    """
    n = int(rng.integers(1, n_max + 1))
    if ws_hz is None:
        ws_hz = float(10.0 ** rng.uniform(0.0, 6.0))
    clusters = []
    uid = 0
    q_min = []
    for sub in range(n):
        size = int(rng.integers(1, size_max + 1))
        c = random_cluster(rng, size, ws_hz, sub, uid)
        uid += size
        clusters.append(c)
        q_min.append(float(min_power_recursion(np.asarray(c.cnr), c.r_min_bps, ws_hz).sum()))
    q_min = np.array(q_min)
    floor = max(q_min.sum(), 1e-3)
    p_max = float(floor * rng.uniform(1.1, 3.0))
    mask = None
    if masks:
        mask = tuple(float(max(q, 1e-3 * floor) * rng.uniform(1.2, 4.0)) for q in q_min)
    pc = float(rng.uniform(0.0, 2.0) * p_max) if p_circuit is None else p_circuit
    params = SystemParams(
        total_bandwidth_hz=ws_hz * n,
        n_subchannels=n,
        p_max_w=p_max,
        p_mask_w=mask,
        p_circuit_w=pc,
        u_max=size_max,
    )
    return clusters, params


def instances(seed, count, **kwargs):
    rng = np.random.default_rng(seed)
    return [random_instance(rng, **kwargs) for _ in range(count)]
