"""Conversions between logarithmic units and linear SI values.

Everything inside the solvers is linear: Watts, Hz, bit/s and CNR in 1/W.
These helpers are used once, at the configuration boundary.
"""

import math

import numpy as np

LN2 = math.log(2.0)


def _from_db(x):
    if np.ndim(x):
        return 10.0 ** (np.asarray(x, dtype=float) / 10.0)
    return 10.0 ** (float(x) / 10.0)


def dbm_to_watts(dbm):
    """Convert power in dBm to Watts."""
    return _from_db(np.subtract(dbm, 30.0) if np.ndim(dbm) else float(dbm) - 30.0)


def watts_to_dbm(watts):
    return 10.0 * np.log10(watts) + 30.0


def db_to_linear(db):
    """Convert a power ratio in dB to a linear factor."""
    return _from_db(db)


def linear_to_db(x):
    return 10.0 * np.log10(x)


def noise_power_w(density_dbm_hz, bandwidth_hz):
    """Thermal noise power in Watts for a density in dBm/Hz over a band."""
    return dbm_to_watts(density_dbm_hz) * bandwidth_hz


def path_loss_db(distance_m):
    """Macro-cell path loss ``128.1 + 37.6 log10(d_km)`` in dB."""
    return 128.1 + 37.6 * np.log10(np.asarray(distance_m, dtype=float) / 1000.0)


def cnr(gain_linear, noise_w):
    """Channel-to-noise ratio: linear power gain divided by noise power."""
    return gain_linear / noise_w
