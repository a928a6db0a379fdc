"""Kernel backend selection.

Prefers the compiled extension; falls back to the pure-Python twin when it
is missing (e.g. source checkout without a build step).  Set
``BITMOD_FORCE_PURE=1`` to force the fallback.
"""

import os

from . import pure

if os.environ.get("BITMOD_FORCE_PURE"):
    _impl = pure
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = pure

BACKEND = _impl.BACKEND_NAME
run_group_dot = _impl.run_group_dot

__all__ = ["BACKEND", "run_group_dot", "pure"]
