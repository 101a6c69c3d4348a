"""Kernel backend selection.

The compiled extension is used when it imports cleanly; otherwise, or when
``NOMA_OPT_PURE=1`` is set, the pure-Python module is used. Both expose the
same functions.
"""

import os

from . import _pykernels

_FORCE_PURE = os.environ.get("NOMA_OPT_PURE", "") not in ("", "0")

if _FORCE_PURE:
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        _impl = _pykernels

BACKEND = _impl.BACKEND

min_power_chain = _impl.min_power_chain
intra_chain = _impl.intra_chain
chain_coefficients = _impl.chain_coefficients
waterfill_level = _impl.waterfill_level
subgradient_dual = _impl.subgradient_dual


def available_backends():
    """Map of backend name to module for every importable implementation."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        out["cython"] = _ckernels
    return out
