"""Kernel backend selection.

The compiled ``_core`` extension is used when it imports; setting
``WEEDNAV_PURE_PYTHON=1`` forces the numpy fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
dubins_matrix = _kernels_py.dubins_matrix
atsp_local_search = _kernels_py.atsp_local_search

if not os.environ.get("WEEDNAV_PURE_PYTHON"):
    try:
        from . import _core
    except ImportError:
        pass
    else:
        BACKEND = "cython"
        dubins_matrix = _core.dubins_matrix
        atsp_local_search = _core.atsp_local_search


def kernels(name=None):
    """Return ``(dubins_matrix, atsp_local_search)`` for ``name`` ('python' or 'cython')."""
    name = name or BACKEND
    if name == "python":
        return _kernels_py.dubins_matrix, _kernels_py.atsp_local_search
    if name == "cython":
        from . import _core

        return _core.dubins_matrix, _core.atsp_local_search
    raise ValueError(f"unknown backend {name!r}")
