"""Build script for the optional compiled kernel extension.

The package works without the extension (a numpy fallback is selected at
import time); set COCUR_NO_EXT=1 to skip compilation entirely.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("COCUR_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "cocur._kernels",
                    ["src/cocur/_kernels.pyx"],
                    # no -ffast-math: scores must be reproducible IEEE doubles
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
