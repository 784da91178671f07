"""Builds the optional Cython core.

The package works without it: ``dysonclt._backend`` falls back to the numpy
implementation when the extension is missing. Build in place with::

    python setup.py build_ext --inplace
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("DYSONCLT_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "dysonclt._core",
                    ["src/dysonclt/_core.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
                "language_level": 3,
            },
        )

setup(ext_modules=ext_modules)
