"""Select the integration backend at import time.

The compiled ``_kernels`` extension is used when it was built; otherwise the
numpy implementation in ``_kernels_py`` takes over. Setting
``RAMAN_ECHO_PURE_PYTHON=1`` forces the fallback.
"""

import os

from . import _kernels_py

python_backend = _kernels_py
compiled_backend = None

if os.environ.get("RAMAN_ECHO_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as compiled_backend  # type: ignore[no-redef]
    except ImportError:  # extension not built
        compiled_backend = None

backend = compiled_backend if compiled_backend is not None else python_backend
BACKEND = backend.BACKEND
integrate_arrow = backend.integrate_arrow
