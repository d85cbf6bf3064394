"""Build the optional Cython kernel module.

If Cython or a compiler is unavailable the package still installs and the
pure-Python kernels are used instead.
"""
import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("CICDEC_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "cicdec._kernels._ckernels",
                    ["src/cicdec/_kernels/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
                "initializedcheck": False,
            },
        )

setup(ext_modules=ext_modules)
