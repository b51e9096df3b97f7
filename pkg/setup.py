"""Build the optional compiled kernels.

If Cython or a C compiler is unavailable the package still installs and
``lavgap.kernels`` falls back to the NumPy implementation.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("LAVGAP_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "lavgap._kernels",
                    ["src/lavgap/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    # no FMA contraction: keeps results bitwise reproducible
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
