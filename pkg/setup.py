"""Build script for the compiled kernels.

The package works without the extension (a pure-Python fallback is selected
at import time), so the build is best-effort: if Cython or a C compiler is
unavailable the install proceeds without `striae._kernels`.
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "striae._kernels",
                sources=["src/striae/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                # No -ffast-math: the correlation kernel's summation order is
                # part of its contract (must match the pure-Python fallback
                # bit for bit).
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
