"""Builds the optional compiled simplex kernels.

Without Cython or a C compiler the package installs pure Python and
falls back to the numpy kernels at import.
"""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("FLEETBALANCE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "fleetbalance.solver._ckernels",
                    ["src/fleetbalance/solver/_ckernels.pyx"],
                    extra_compile_args=["-O2", "-ffp-contract=off"],
                )
            ],
            compiler_directives={"language_level": "3", "embedsignature": True},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
