import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # the pure-Python kernels are used instead
    cythonize = None

ext_modules = []
if cythonize is not None and not os.environ.get("CLUTTERPLAN_NO_EXT"):
    ext_modules = cythonize(
        [
            Extension(
                "clutterplan._ckernels",
                ["src/clutterplan/_ckernels.pyx"],
                include_dirs=[np.get_include()],
                # keep results bit-identical to the Python kernels: no FMA contraction, and no
                # fusing of sin/cos into sincos (glibc's sincos can differ in the last bit)
                extra_compile_args=["-O3", "-ffp-contract=off", "-fno-fast-math",
                                    "-fno-builtin-sin", "-fno-builtin-cos"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
