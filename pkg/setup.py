import os

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# The kernel draws from numpy's C distribution library so that it consumes the
# bit generator stream exactly like the pure-Python fallback does.
NPYRANDOM_LIB = os.path.join(os.path.dirname(np.__file__), "random", "lib")

extensions = [
    Extension(
        "aoi_bandits._kernel",
        ["src/aoi_bandits/_kernel.pyx"],
        include_dirs=[np.get_include()],
        library_dirs=[NPYRANDOM_LIB],
        libraries=["npyrandom", "m"],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        optional=True,
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
            "initializedcheck": False,
        },
    )
)
