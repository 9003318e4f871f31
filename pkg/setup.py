import os

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

NPY_RANDOM_LIB = os.path.join(os.path.dirname(np.__file__), "random", "lib")

extensions = [
    Extension(
        "bnpricing._ckernels",
        ["src/bnpricing/_ckernels.pyx"],
        include_dirs=[np.get_include()],
        library_dirs=[NPY_RANDOM_LIB],
        libraries=["npyrandom", "m"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        # identical rounding to the numpy fallback: no fused multiply-add
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
)
