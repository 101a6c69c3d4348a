"""Scenario configuration for Monte-Carlo sweeps.

Configs are JSON documents. Powers are given in dBm and converted to Watts
once, here. See the README for the full schema.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field, replace

from ..units import dbm_to_watts

__all__ = ["ConfigError", "ScenarioConfig", "SchemeSpec", "parse_scheme", "load_json"]

_SCHEME_RE = re.compile(r"^FD-NOMA\((\d+)\)$")
_ROOT_KEYS = {
    "n_users", "r_min_bps", "u_max_list", "schemes", "n_realizations", "rng_seed",
    "cell_radius_m", "min_distance_m", "shadowing_sigma_db", "noise_density_dbm_hz",
    "total_bandwidth_hz", "p_max_dbm", "p_circuit_dbm", "p_mask_dbm", "inner", "sweep",
    "user_placement",
}


class ConfigError(ValueError):
    """The configuration document is malformed or inconsistent."""


@dataclass(frozen=True)
class SchemeSpec:
    """A multiple-access scheme. ``u_max=None`` means every user on one subchannel."""

    label: str
    u_max: int | None

    def n_clusters(self, n_users: int) -> int:
        u = n_users if self.u_max is None else self.u_max
        return -(-n_users // u)

    def effective_u_max(self, n_users: int) -> int:
        return n_users if self.u_max is None else self.u_max


def parse_scheme(name: str, u_max_list=(2, 4, 6)):
    """Expand a scheme name into one or more :class:`SchemeSpec`.

    Accepts ``SC-NOMA``, ``FDMA``, ``FD-NOMA(U)`` and bare ``FD-NOMA``,
    which expands to every entry of ``u_max_list`` in decreasing order.
    """
    name = name.strip()
    if name == "SC-NOMA":
        return [SchemeSpec("SC-NOMA", None)]
    if name == "FDMA":
        return [SchemeSpec("FDMA", 1)]
    if name == "FD-NOMA":
        return [SchemeSpec(f"FD-NOMA({u})", u) for u in sorted(set(u_max_list), reverse=True)]
    m = _SCHEME_RE.match(name)
    if m:
        u = int(m.group(1))
        if u < 1:
            raise ConfigError(f"scheme {name!r}: U must be at least 1")
        return [SchemeSpec(name, u)]
    raise ConfigError(f"unknown scheme {name!r}")


def _num(d, key, default, *, positive=False, nonneg=False):
    v = d.get(key, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{key} must be a number, got {v!r}")
    v = float(v)
    if not math.isfinite(v):
        raise ConfigError(f"{key} must be finite")
    if positive and v <= 0.0:
        raise ConfigError(f"{key} must be positive")
    if nonneg and v < 0.0:
        raise ConfigError(f"{key} must be nonnegative")
    return v


def _int(d, key, default, minimum):
    v = d.get(key, default)
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{key} must be an integer, got {v!r}")
    if v < minimum:
        raise ConfigError(f"{key} must be at least {minimum}")
    return v


@dataclass(frozen=True)
class ScenarioConfig:
    """One Monte-Carlo scenario: a fixed user count and demand."""

    n_users: int = 30
    r_min_bps: float | tuple = 3e6
    u_max_list: tuple = (2, 4, 6)
    schemes: tuple = ("SC-NOMA", "FD-NOMA", "FDMA")
    n_realizations: int = 500
    rng_seed: int = 0
    cell_radius_m: float = 500.0
    min_distance_m: float = 20.0
    shadowing_sigma_db: float = 8.0
    noise_density_dbm_hz: float = -174.0
    total_bandwidth_hz: float = 5e6
    p_max_dbm: float = 46.0
    p_circuit_dbm: float = 30.0
    p_mask_dbm: float | None = None
    inner: str = "subgradient"
    user_placement: str = "radial"
    sweep_users: tuple = field(default=(), compare=False)
    sweep_r_min: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if self.n_users < 1:
            raise ConfigError("n_users must be at least 1")
        if self.n_realizations < 1:
            raise ConfigError("n_realizations must be at least 1")
        if not 0 <= self.rng_seed < 2 ** 64:
            raise ConfigError("rng_seed must fit in an unsigned 64-bit integer")
        if not self.cell_radius_m > self.min_distance_m >= 0.0:
            raise ConfigError("cell_radius_m must exceed min_distance_m")
        if self.shadowing_sigma_db < 0.0:
            raise ConfigError("shadowing_sigma_db must be nonnegative")
        if self.inner not in ("subgradient", "barrier"):
            raise ConfigError(f"inner must be 'subgradient' or 'barrier', got {self.inner!r}")
        if self.user_placement not in ("radial", "area"):
            raise ConfigError(
                f"user_placement must be 'radial' or 'area', got {self.user_placement!r}"
            )
        if isinstance(self.r_min_bps, (tuple, list)):
            if len(self.r_min_bps) != self.n_users:
                raise ConfigError("per-user r_min_bps must have n_users entries")
            if any(r < 0.0 or not math.isfinite(r) for r in self.r_min_bps):
                raise ConfigError("r_min_bps entries must be finite and nonnegative")
            object.__setattr__(self, "r_min_bps", tuple(float(r) for r in self.r_min_bps))
        elif self.r_min_bps < 0.0 or not math.isfinite(self.r_min_bps):
            raise ConfigError("r_min_bps must be finite and nonnegative")
        if any(u < 1 for u in self.u_max_list):
            raise ConfigError("u_max_list entries must be at least 1")
        self.scheme_specs()

    @property
    def p_max_w(self) -> float:
        return dbm_to_watts(self.p_max_dbm)

    @property
    def p_circuit_w(self) -> float:
        return dbm_to_watts(self.p_circuit_dbm)

    @property
    def p_mask_w(self) -> float:
        return self.p_max_w if self.p_mask_dbm is None else dbm_to_watts(self.p_mask_dbm)

    def user_demands(self):
        if isinstance(self.r_min_bps, tuple):
            return list(self.r_min_bps)
        return [float(self.r_min_bps)] * self.n_users

    @property
    def r_min_label(self) -> float:
        if isinstance(self.r_min_bps, tuple):
            return math.fsum(self.r_min_bps) / len(self.r_min_bps)
        return float(self.r_min_bps)

    def scheme_specs(self):
        out = []
        for name in self.schemes:
            for spec in parse_scheme(name, self.u_max_list):
                if spec.label not in [s.label for s in out]:
                    out.append(spec)
        if not out:
            raise ConfigError("at least one scheme is required")
        return out

    def with_overrides(self, **changes):
        return replace(self, **changes)

    def expand(self):
        """Scenarios of the configured sweep grid (users outer, demand inner)."""
        users = self.sweep_users or (self.n_users,)
        demands = self.sweep_r_min or (self.r_min_bps,)
        out = []
        for k in users:
            for r in demands:
                if isinstance(r, tuple) and len(r) != k:
                    raise ConfigError("per-user r_min_bps cannot be combined with a user sweep")
                out.append(replace(self, n_users=k, r_min_bps=r, sweep_users=(), sweep_r_min=()))
        return out

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ConfigError("config root must be an object")
        unknown = set(d) - _ROOT_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        r = d.get("r_min_bps", 3e6)
        if isinstance(r, list):
            if not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in r):
                raise ConfigError("r_min_bps list must hold numbers")
            r = tuple(float(x) for x in r)
        else:
            r = _num(d, "r_min_bps", 3e6, nonneg=True)
        u_list = d.get("u_max_list", [2, 4, 6])
        if not isinstance(u_list, list) or not all(
            isinstance(u, int) and not isinstance(u, bool) for u in u_list
        ):
            raise ConfigError("u_max_list must be a list of integers")
        schemes = d.get("schemes", ["SC-NOMA", "FD-NOMA", "FDMA"])
        if not isinstance(schemes, list) or not all(isinstance(s, str) for s in schemes):
            raise ConfigError("schemes must be a list of strings")
        mask = d.get("p_mask_dbm")
        if mask is not None:
            mask = _num(d, "p_mask_dbm", None)
        inner = d.get("inner", "subgradient")
        if not isinstance(inner, str):
            raise ConfigError("inner must be a string")
        placement = d.get("user_placement", "radial")
        if not isinstance(placement, str):
            raise ConfigError("user_placement must be a string")
        sweep = d.get("sweep", {})
        if not isinstance(sweep, dict) or set(sweep) - {"n_users", "r_min_bps"}:
            raise ConfigError("sweep must be an object with keys n_users and/or r_min_bps")
        s_users = sweep.get("n_users", [])
        s_rmin = sweep.get("r_min_bps", [])
        if not isinstance(s_users, list) or not all(
            isinstance(k, int) and not isinstance(k, bool) and k >= 1 for k in s_users
        ):
            raise ConfigError("sweep.n_users must be a list of positive integers")
        if not isinstance(s_rmin, list) or not all(
            isinstance(x, (int, float)) and not isinstance(x, bool) and x >= 0 for x in s_rmin
        ):
            raise ConfigError("sweep.r_min_bps must be a list of nonnegative numbers")
        seed = d.get("rng_seed", 0)
        if isinstance(seed, bool) or not isinstance(seed, int):
            raise ConfigError("rng_seed must be an integer")
        return cls(
            n_users=_int(d, "n_users", 30, 1),
            r_min_bps=r,
            u_max_list=tuple(u_list),
            schemes=tuple(schemes),
            n_realizations=_int(d, "n_realizations", 500, 1),
            rng_seed=seed,
            cell_radius_m=_num(d, "cell_radius_m", 500.0, positive=True),
            min_distance_m=_num(d, "min_distance_m", 20.0, nonneg=True),
            shadowing_sigma_db=_num(d, "shadowing_sigma_db", 8.0, nonneg=True),
            noise_density_dbm_hz=_num(d, "noise_density_dbm_hz", -174.0),
            total_bandwidth_hz=_num(d, "total_bandwidth_hz", 5e6, positive=True),
            p_max_dbm=_num(d, "p_max_dbm", 46.0),
            p_circuit_dbm=_num(d, "p_circuit_dbm", 30.0),
            p_mask_dbm=mask,
            inner=inner,
            user_placement=placement,
            sweep_users=tuple(s_users),
            sweep_r_min=tuple(float(x) for x in s_rmin),
        )


def load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc
