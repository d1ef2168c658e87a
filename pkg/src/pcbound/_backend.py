"""Pick the compiled kernels when available, else the pure-Python reference.

Set ``PCBOUND_PURE=1`` to force the reference implementation.
"""

import os

from . import _kernels_py as pure

compiled = None
if os.environ.get("PCBOUND_PURE") != "1":
    try:
        from . import _kernels as compiled
    except ImportError:  # extension not built
        compiled = None

kernels = compiled if compiled is not None else pure
COMPILED = compiled is not None

InconclusiveSolve = pure.InconclusiveSolve
