"""Backend selection for the chain kernels.

The compiled extension ``phasefkg._ckern`` is used when importable; the
pure-python module ``phasefkg._pykern`` otherwise, or when the environment
variable ``PHASEFKG_FORCE_PYTHON`` is set to a nonempty value.  Both expose
the same functions with the same semantics, consume identical precomputed
probability tables, and therefore generate identical trajectories from
identical (idx, u) blocks.
"""

from __future__ import annotations

import os

import numpy as np

from . import _pykern

if os.environ.get("PHASEFKG_FORCE_PYTHON"):
    _impl = _pykern
else:
    try:
        from . import _ckern as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _pykern

BACKEND = _impl.BACKEND

gcwm_chain_run = _impl.gcwm_chain_run
gcwm_quadruple_run = _impl.gcwm_quadruple_run
ergm_chain_run = _impl.ergm_chain_run
local_fkg_min = _impl.local_fkg_min


def backends():
    """All importable backends, for cross-checking and benchmarks."""
    out = {"python": _pykern}
    try:
        from . import _ckern

        out["compiled"] = _ckern
    except ImportError:
        pass
    return out


def dilate_mask(mask: np.ndarray, nbits: int) -> np.ndarray:
    """States within Hamming distance one of the mask (binary cube)."""
    mask = np.asarray(mask, dtype=bool)
    states = np.arange(1 << nbits, dtype=np.int64)
    out = mask.copy()
    for b in range(nbits):
        out |= mask[states ^ (1 << b)]
    return out
