"""Build script. The edit-distance kernels compile to a C extension when
Cython and a compiler are available; otherwise the package installs with the
pure-Python fallback only (selected at import time in errgen._kernels).

Set ERRGEN_SKIP_EXT=1 to skip the extension build explicitly.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("ERRGEN_SKIP_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "errgen._kernels._editdist",
                    ["src/errgen/_kernels/_editdist.pyx"],
                )
            ],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "initializedcheck": False,
            },
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
