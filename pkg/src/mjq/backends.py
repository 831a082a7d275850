"""Backend selection for the hot kernels.

Two interchangeable builds of `mjq._kernels` exist:

* ``numba`` -- every kernel compiled with ``numba.njit(nogil=True)``.
* ``numpy`` -- the same source un-jitted, running as plain numpy/python.

The default is numba when importable; set ``MJQ_BACKEND=numpy`` to force
the fallback (or ``MJQ_BACKEND=numba`` to fail loudly if numba is
missing). Both backends produce bit-identical results; the fallback is
orders of magnitude slower and exists for verification, debugging and
numba-free installs. See ``benchmarks/backend_bench.py``.
"""

import functools
import os

import numpy as np

from . import _kernels

_ENV_VAR = "MJQ_BACKEND"

_cache = {}


def _identity_jit(func):
    # integer mixing relies on uint64 wraparound; numpy scalars warn on
    # overflow unless told otherwise, so the un-jitted entry points run
    # under errstate.
    @functools.wraps(func)
    def wrapper(*args):
        with np.errstate(over="ignore"):
            return func(*args)

    return wrapper


def get_backend(name=None):
    """Return the kernel namespace for `name` ('numba' or 'numpy').

    With name=None the MJQ_BACKEND environment variable decides,
    defaulting to numba when available.
    """
    if name is None:
        name = os.environ.get(_ENV_VAR, "").strip().lower() or "auto"
    if name == "auto":
        try:
            import numba  # noqa: F401

            name = "numba"
        except ImportError:
            name = "numpy"
    if name in _cache:
        return _cache[name]
    if name == "numba":
        from numba import njit

        kernels = _kernels.make_kernels(njit(nogil=True))
    elif name == "numpy":
        kernels = _kernels.make_kernels(_identity_jit)
    else:
        raise ValueError(f"unknown backend {name!r} (use 'numba' or 'numpy')")
    kernels.name = name
    _cache[name] = kernels
    return kernels
