"""Pick the compiled kernels when importable, else the numpy fallback.

Set ``RESPOISSON_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
kernels = _kernels_py

if os.environ.get("RESPOISSON_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _compiled  # type: ignore[attr-defined]
    except ImportError:
        pass
    else:
        kernels = _compiled
        BACKEND = "cython"

__all__ = ["kernels", "BACKEND", "_kernels_py"]
