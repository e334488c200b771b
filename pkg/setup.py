"""Build script. Compiles the optional Cython fast path when Cython is present.

Without Cython (or if compilation fails) the package installs anyway and falls
back to the numpy kernels at import time.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    ext_modules = cythonize(
        [
            Extension(
                "hintguess.numerics._fastcore",
                ["src/hintguess/numerics/_fastcore.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
