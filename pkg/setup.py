"""Builds the optional compiled sampling kernel.

The package works without it (a NumPy fallback is selected at import time),
so a missing Cython/compiler toolchain only costs speed, never correctness.
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "seqvo._native",
                ["src/seqvo/_native.pyx"],
                include_dirs=[numpy.get_include()],
                # No -ffast-math: the fallback and the compiled kernel must
                # produce bit-identical IEEE results.
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
