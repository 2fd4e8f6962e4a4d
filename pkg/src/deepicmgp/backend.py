"""Selects the kernel implementation at import time.

The compiled extension ``deepicmgp._core`` is used when it imports;
otherwise the NumPy twin in ``deepicmgp._core_py`` is used. Setting
``DEEPICMGP_BACKEND=python`` forces the fallback.

Callers must look functions up through this module at call time
(``backend.kernel_matrix(...)``) so that :func:`use` takes effect.
"""

import contextlib
import importlib
import os

from . import _core_py

_FUNCTIONS = ("sqdist", "cross_kernel", "kernel_matrix", "layer_loglik", "alc_sums", "lhd_swaps")

OK = _core_py.OK
OK_RETRIED = _core_py.OK_RETRIED
KERNEL_NOT_PD = _core_py.KERNEL_NOT_PD
DEGENERATE = _core_py.DEGENERATE


def load(name):
    """Return the implementation module for ``name`` ("compiled" or "python")."""
    if name == "python":
        return _core_py
    if name == "compiled":
        return importlib.import_module("deepicmgp._core")
    raise ValueError(f"unknown backend {name!r}")


def available():
    names = ["python"]
    try:
        load("compiled")
    except ImportError:
        pass
    else:
        names.insert(0, "compiled")
    return names


def _bind(module):
    g = globals()
    for fn in _FUNCTIONS:
        g[fn] = getattr(module, fn)
    g["NAME"] = module.NAME


def use(name):
    """Switch the active implementation for the whole process."""
    _bind(load(name))


@contextlib.contextmanager
def using(name):
    previous = NAME
    use(name)
    try:
        yield
    finally:
        use(previous)


def _initial():
    requested = os.environ.get("DEEPICMGP_BACKEND", "").strip().lower()
    if requested == "python":
        return _core_py
    try:
        return load("compiled")
    except ImportError:
        if requested == "compiled":
            raise
        return _core_py


NAME = None
_bind(_initial())
