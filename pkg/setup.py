import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if os.environ.get("DPFL_NO_EXT", "") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:  # fall back to the pure-python kernels
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "dpfl._ckernels",
                    ["src/dpfl/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    # results must match the numpy kernels bit for bit
                    extra_compile_args=["-O2", "-ffp-contract=off"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
