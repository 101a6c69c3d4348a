"""User clustering for frequency-division NOMA over flat fading."""

from __future__ import annotations

import math

from ..model import ClusterSpec

__all__ = ["n_clusters", "cluster_users"]


def n_clusters(n_users: int, u_max: int) -> int:
    """Smallest number of clusters that respects ``u_max``."""
    if n_users < 1 or u_max < 1:
        raise ValueError("n_users and u_max must be at least 1")
    return math.ceil(n_users / u_max)


def cluster_users(cnr, u_max: int, r_min_bps=0.0, user_ids=None):
    """Round-robin assignment of users by descending CNR.

    The ``N`` strongest users become the heads of clusters ``0..N-1``, the
    next ``N`` users are spread in the same order, and so on. Ties in CNR
    are ranked by ascending user id.
    """
    k = len(cnr)
    ids = list(range(k)) if user_ids is None else [int(u) for u in user_ids]
    if len(ids) != k:
        raise ValueError("one user id per CNR is required")
    if isinstance(r_min_bps, (int, float)):
        demands = [float(r_min_bps)] * k
    else:
        demands = [float(r) for r in r_min_bps]
        if len(demands) != k:
            raise ValueError("one demand per user is required")
    n = n_clusters(k, u_max)
    order = sorted(range(k), key=lambda i: (-float(cnr[i]), ids[i]))
    members = [[] for _ in range(n)]
    for rank, i in enumerate(order):
        members[rank % n].append(i)
    return [
        ClusterSpec(
            sub,
            [ids[i] for i in group],
            [float(cnr[i]) for i in group],
            [demands[i] for i in group],
        )
        for sub, group in enumerate(members)
    ]
