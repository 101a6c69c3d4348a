"""Reading a single solver instance from a JSON document.

Schema::

    {
      "total_bandwidth_hz": 2.0, "n_subchannels": 2,
      "p_max_w": 4.0, "p_mask_w": [3.0, 3.0], "p_circuit_w": 1.0, "u_max": 2,
      "clusters": [
        {"subchannel": 0, "user_ids": [0, 1], "cnr": [1.0, 4.0],
         "r_min_bps": [1.0, 1.0], "r_max_bps": null}
      ]
    }

Values are linear SI units. ``p_mask_w`` may be a single number.
"""

from __future__ import annotations

from .errors import NomaError
from .model import ClusterSpec, SystemParams
from .sim.config import ConfigError

__all__ = ["instance_from_dict"]

_KEYS = {"total_bandwidth_hz", "n_subchannels", "p_max_w", "p_mask_w", "p_circuit_w", "u_max",
         "clusters"}
_CLUSTER_KEYS = {"subchannel", "user_ids", "cnr", "r_min_bps", "r_max_bps"}


def instance_from_dict(d):
    """Return ``(clusters, params)``; raises :class:`ConfigError` on bad input."""
    if not isinstance(d, dict):
        raise ConfigError("instance root must be an object")
    unknown = set(d) - _KEYS
    if unknown:
        raise ConfigError(f"unknown instance keys: {sorted(unknown)}")
    missing = {"total_bandwidth_hz", "n_subchannels", "p_max_w", "clusters"} - set(d)
    if missing:
        raise ConfigError(f"missing instance keys: {sorted(missing)}")
    try:
        params = SystemParams(
            total_bandwidth_hz=d["total_bandwidth_hz"],
            n_subchannels=d["n_subchannels"],
            p_max_w=d["p_max_w"],
            p_mask_w=d.get("p_mask_w"),
            p_circuit_w=d.get("p_circuit_w", 0.0),
            u_max=d.get("u_max", 1),
        )
    except (TypeError, ValueError, NomaError) as exc:
        raise ConfigError(f"invalid system parameters: {exc}") from exc
    raw = d["clusters"]
    if not isinstance(raw, list):
        raise ConfigError("clusters must be a list")
    clusters = []
    seen = set()
    for pos, c in enumerate(raw):
        if not isinstance(c, dict):
            raise ConfigError(f"cluster {pos} must be an object")
        extra = set(c) - _CLUSTER_KEYS
        if extra:
            raise ConfigError(f"cluster {pos}: unknown keys {sorted(extra)}")
        try:
            spec = ClusterSpec(
                c["subchannel"], c["user_ids"], c["cnr"], c["r_min_bps"], c.get("r_max_bps")
            )
        except KeyError as exc:
            raise ConfigError(f"cluster {pos}: missing key {exc.args[0]!r}") from exc
        except (TypeError, ValueError, NomaError) as exc:
            raise ConfigError(f"cluster {pos}: {exc}") from exc
        if not 0 <= spec.subchannel_index < params.n_subchannels:
            raise ConfigError(f"cluster {pos}: subchannel {spec.subchannel_index} out of range")
        if spec.subchannel_index in seen:
            raise ConfigError(f"cluster {pos}: subchannel {spec.subchannel_index} used twice")
        if spec.size > params.u_max:
            raise ConfigError(f"cluster {pos}: {spec.size} users exceed u_max={params.u_max}")
        seen.add(spec.subchannel_index)
        clusters.append(spec)
    return clusters, params
