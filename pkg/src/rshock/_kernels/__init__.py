"""Kernel backend selection.

The compiled extension is preferred; the pure Python module is the fallback
(and the reference implementation).  Set RSHOCK_PURE=1 to force the
fallback.  Both backends are bit-identical.
"""

import os

if os.environ.get("RSHOCK_PURE", "") in ("1", "true", "yes"):
    from . import _pure as _impl
else:
    try:
        from . import _fast as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _pure as _impl

BACKEND = _impl.BACKEND
conj_lines = _impl.conj_lines
psor_sweeps = _impl.psor_sweeps
flow_polish_1d = _impl.flow_polish_1d
flow_polish_2d = _impl.flow_polish_2d
