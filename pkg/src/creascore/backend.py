"""Selects the kernel backend: compiled extension when built, numpy otherwise.

Set CREASCORE_BACKEND=python or CREASCORE_BACKEND=compiled to force one side
(the benchmark and the parity tests do this).
"""

import os

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

KIND_LINEAR = _kernels_py.KIND_LINEAR
KIND_EXPONENTIAL = _kernels_py.KIND_EXPONENTIAL


def active_backend():
    forced = os.environ.get("CREASCORE_BACKEND")
    if forced == "python":
        return _kernels_py
    if forced == "compiled":
        if _compiled is None:
            raise RuntimeError(
                "CREASCORE_BACKEND=compiled but the extension is not built; "
                "reinstall with Cython available"
            )
        return _compiled
    if forced not in (None, ""):
        raise ValueError(f"unknown CREASCORE_BACKEND value {forced!r}")
    return _compiled if _compiled is not None else _kernels_py


def backend_name() -> str:
    return "compiled" if active_backend() is _compiled and _compiled is not None else "python"


def compiled_available() -> bool:
    return _compiled is not None
