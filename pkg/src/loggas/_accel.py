"""Backend selection for the hot kernels.

Set ``LOGGAS_DISABLE_NUMBA=1`` to run every kernel through its numpy/scipy
fallback instead of the numba-compiled version.
"""
import os

_FLAG = os.environ.get("LOGGAS_DISABLE_NUMBA", "").strip().lower()

try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _FLAG not in ("1", "true", "yes", "on")


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
