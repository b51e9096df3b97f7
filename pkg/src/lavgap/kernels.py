"""Backend selection for the hot loops.

The compiled extension is used when it imports; set ``LAVGAP_PURE=1`` to
force the NumPy implementation (handy for comparisons and debugging).
"""
import os

from . import _kernels_py

BACKEND = "numpy"
_impl = _kernels_py

if not os.environ.get("LAVGAP_PURE"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None
    if _compiled is not None:
        _impl = _compiled
        BACKEND = "cython"


def use_backend(name):
    """Switch backend at runtime ("cython" or "numpy"); returns the previous one."""
    global _impl, BACKEND
    previous = BACKEND
    if name == "numpy":
        _impl = _kernels_py
    elif name == "cython":
        from . import _kernels as compiled
        _impl = compiled
    else:
        raise ValueError(f"unknown backend {name!r}")
    BACKEND = name
    return previous


def locate(*args):
    return _impl.locate(*args)


def convolve(*args):
    return _impl.convolve(*args)


def pair_max(*args):
    return _impl.pair_max(*args)
