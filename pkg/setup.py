"""Build the optional compiled p-variation core.

The extension is optional: when Cython or a C compiler is unavailable the
package installs without it and ``roughito.variation`` falls back to the
numpy implementation in ``roughito._variation_py``.
"""

import os

from setuptools import Extension, setup

CFLAGS = ["-O3"]


def _extensions():
    if os.environ.get("ROUGHITO_NO_EXT"):
        return []
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "roughito._variation_core",
        ["src/roughito/_variation_core.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=CFLAGS,
    )
    return cythonize(
        [ext],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
            "nonecheck": False,
        },
    )


setup(ext_modules=_extensions())
