"""Select the compiled series kernels when available.

Set ``ELLMOD_PURE=1`` to force the pure-Python implementation.
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if not os.environ.get("ELLMOD_PURE"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        pass

mul = _impl.mul
inv = _impl.inv
powr = _impl.powr
exp = _impl.exp
log = _impl.log
compose = _impl.compose
