"""Build script: compiles the optional grid-kernel extension.

The package is fully functional without the extension (a pure-Python
fallback is selected at import time); compiling it makes planning and
cost precomputation roughly two orders of magnitude faster.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "follower._kernels._core",
                ["src/follower/_kernels/_core.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
