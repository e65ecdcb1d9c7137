"""Kernel dispatch: numba-compiled when available, numpy otherwise.

``LOGGAS_DISABLE_NUMBA=1`` forces the numpy path. Both modules expose the same
functions; :func:`backend` returns the one in use, and :func:`get` gives
explicit access (used by the benchmark and by backend-agreement tests).
"""
from . import _accel
from . import _kernels_np

NAMES = (
    "tridiag_eigvalsh", "tridiag_select", "householder_tridiag", "dense_eigvalsh",
    "loggas_logp_grad", "mala_loggas_run", "local_logp_grad", "local_coupling",
    "mala_local_run", "local_em_batch", "rk4_fundamental", "dbm_drift", "dbm_run",
    "dbm_run_bridged",
)


def get(name):
    """Module implementing the kernels for backend ``name`` ('numba'/'numpy')."""
    if name == "numpy":
        return _kernels_np
    if name == "numba":
        if not _accel.HAVE_NUMBA:
            raise RuntimeError("numba is not installed")
        from . import _kernels_nb
        return _kernels_nb
    raise ValueError(f"unknown backend {name!r}")


def backend():
    return get(_accel.backend_name())


_impl = backend()
for _n in NAMES:
    globals()[_n] = getattr(_impl, _n)
del _n
