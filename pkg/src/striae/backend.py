"""Kernel backend selection.

The compiled extension is preferred; the pure-Python fallback is selected
when the extension is missing or when STRIAE_PURE_PYTHON is set (useful for
benchmarks and parity tests). Both expose the same four entry points with
identical semantics; the correlation routines agree bit for bit.
"""

import os

STATUS_OK = 0
STATUS_INSUFFICIENT_OVERLAP = 1
STATUS_UNDEFINED = 2
STATUS_NO_VALID_LAG = 3

_force_pure = os.environ.get("STRIAE_PURE_PYTHON", "") not in ("", "0")

if _force_pure:
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as _impl

corr_at_lag_kernel = _impl.corr_at_lag_kernel
lag_sweep_kernel = _impl.lag_sweep_kernel
loess_pass = _impl.loess_pass


def backend_name() -> str:
    return "pure-python" if _impl.__name__.endswith("_kernels_py") else "compiled"


def get_backend(name: str):
    """Fetch a specific backend module by name (for benchmarks/tests)."""
    if name == "pure-python":
        from . import _kernels_py
        return _kernels_py
    if name == "compiled":
        from . import _kernels  # raises ImportError if not built
        return _kernels
    raise ValueError(f"unknown backend {name!r}")
