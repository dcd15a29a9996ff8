"""Select the simplex kernel backend at import.

The compiled extension is used when it was built; set
``FLEETBALANCE_PURE_PYTHON=1`` to force the numpy fallback.
"""

import os

from fleetbalance.solver import _pykernels as python_kernels

compiled_kernels = None
if os.environ.get("FLEETBALANCE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from fleetbalance.solver import _ckernels as compiled_kernels
    except ImportError:
        compiled_kernels = None

default = compiled_kernels if compiled_kernels is not None else python_kernels
BACKEND = "compiled" if compiled_kernels is not None else "python"
