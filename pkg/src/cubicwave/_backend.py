"""Kernel selection: compiled extension when importable, pure Python otherwise.

Set ``CUBICWAVE_BACKEND=python`` to force the fallback.
"""

import os

from . import _kernels_py

kernels = _kernels_py
NAME = "python"

if os.environ.get("CUBICWAVE_BACKEND", "").lower() != "python":
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        pass
    else:
        kernels = _compiled
        NAME = "cython"


def get(name=None):
    """Return the kernel module ``name`` (``"cython"``/``"python"``), default the active one."""
    if name is None:
        return kernels
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown backend {name!r}")
