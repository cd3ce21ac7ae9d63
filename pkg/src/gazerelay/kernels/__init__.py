"""Backend selection for the hot trace kernels.

Set ``GAZERELAY_KERNELS=numpy`` to force the pure-numpy reference path,
``numba`` to require the compiled path, or leave unset (``auto``) to use
numba when importable and fall back to numpy otherwise.
"""

from __future__ import annotations

import os

from . import reference

_ENV_FLAG = "GAZERELAY_KERNELS"

_requested = os.environ.get(_ENV_FLAG, "auto").lower()
if _requested not in ("auto", "numba", "numpy"):
    raise RuntimeError(
        f"{_ENV_FLAG} must be one of auto|numba|numpy, got {_requested!r}"
    )

if _requested == "numpy":
    _impl = reference
    _backend = "numpy"
else:
    try:
        from . import accel as _impl  # noqa: F401

        _backend = "numba"
    except ImportError:
        if _requested == "numba":
            raise
        _impl = reference
        _backend = "numpy"

one_euro_trace = _impl.one_euro_trace
classify_trace = _impl.classify_trace
dwell_trace = _impl.dwell_trace


def backend() -> str:
    """Name of the active kernel backend ('numba' or 'numpy')."""
    return _backend
