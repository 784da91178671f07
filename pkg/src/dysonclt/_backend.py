"""Selects the compiled entry-stream kernels when available.

Set ``DYSONCLT_BACKEND=python`` to force the numpy fallback.
"""
import os

from . import _core_py

python = _core_py
compiled = None

if os.environ.get("DYSONCLT_BACKEND", "").lower() != "python":
    try:
        from . import _core as compiled
    except ImportError:
        compiled = None

active = compiled if compiled is not None else python
NAME = "cython" if active is compiled else "python"


def uniforms(seed, rows, cols, count):
    return active.uniforms(seed, rows, cols, count)


def normals(seed, rows, cols, count):
    return active.normals(seed, rows, cols, count)
