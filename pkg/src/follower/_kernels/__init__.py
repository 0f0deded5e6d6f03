"""Grid kernels: compiled core with a pure-Python fallback.

The compiled extension (`_core`, Cython) and the fallback (`_pure`) implement
identical algorithms with identical tie-breaking and float accumulation order,
so they produce bit-identical results. Selection happens once at import;
set FOLLOWER_PURE_KERNELS=1 to force the fallback (the kernel benchmark uses
both modules explicitly).
"""

import os

from . import _pure

try:
    from . import _core
except ImportError:
    _core = None

if _core is not None and os.environ.get("FOLLOWER_PURE_KERNELS", "") != "1":
    _impl = _core
else:
    _impl = _pure


def backend():
    """The active kernel module (compiled if available, else pure Python)."""
    return _impl


def backend_name() -> str:
    return "compiled" if _impl is _core else "pure"


def compiled_available() -> bool:
    return _core is not None


def compiled_backend():
    return _core


def pure_backend():
    return _pure
