"""Build script for the optional compiled kernel.

The package works without the extension (a numpy fallback is selected at
import time), so any failure here degrades to a pure-Python install instead
of aborting.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "ptproc._kernels_cy",
                ["src/ptproc/_kernels_cy.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - exercised only on broken toolchains
    print(f"ptproc: skipping compiled kernels ({exc!r}); pure-Python fallback will be used")

setup(ext_modules=ext_modules)
