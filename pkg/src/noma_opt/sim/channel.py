"""Channel realizations for a single-cell downlink.

Users are dropped around the base station at a distance between the
minimum distance and the cell radius. By default the distance itself is
uniform; ``user_placement="area"`` makes positions uniform over the annulus
area instead. The power gain combines distance path loss, lognormal shadowing and unit-mean
Rayleigh fading, and is flat across subchannels.

Each realization owns an independent Philox4x64-10 stream keyed by
``rng_seed + 2**64 * index``, so realization ``i`` is identical whether it
is drawn alone, serially or by any worker of a pool.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..units import db_to_linear, noise_power_w, path_loss_db

__all__ = ["Realization", "realization_rng", "generate_realization"]


def realization_rng(seed: int, index: int) -> np.random.Generator:
    """Counter-based generator for realization ``index`` of a run."""
    return np.random.Generator(np.random.Philox(key=int(seed) + (int(index) << 64)))


@dataclass(frozen=True)
class Realization:
    distances_m: np.ndarray
    gains: np.ndarray

    @property
    def n_users(self) -> int:
        return len(self.gains)

    def cnr(self, noise_density_dbm_hz: float, bandwidth_hz: float) -> np.ndarray:
        """Noise-normalized CNR in 1/W for a subchannel of the given width."""
        return self.gains / noise_power_w(noise_density_dbm_hz, bandwidth_hz)


def generate_realization(config, rng: np.random.Generator) -> Realization:
    """Draw positions, shadowing and fading for every user.

    Draw order is fixed (radii, shadowing, fading) so a stream always maps
    to the same channel.
    """
    k = config.n_users
    r0 = config.min_distance_m
    r1 = config.cell_radius_m
    u = rng.random(k)
    if config.user_placement == "area":
        d = np.sqrt(r0 * r0 + u * (r1 * r1 - r0 * r0))
    else:
        d = r0 + u * (r1 - r0)
    shadow_db = rng.normal(0.0, 1.0, k) * config.shadowing_sigma_db
    fading = rng.exponential(1.0, k)
    gains = db_to_linear(-(path_loss_db(d) + shadow_db)) * fading
    return Realization(distances_m=d, gains=np.asarray(gains, dtype=np.float64))
