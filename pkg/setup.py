"""Build script: compiles the optional Cython kernel core.

The package works without the extension (a NumPy fallback is selected at
import time), so any build failure here degrades gracefully to a pure
Python install.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext = Extension(
        "graphonlab._kernels._core",
        ["src/graphonlab/_kernels/_core.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    ext_modules = cythonize([ext], language_level=3)
except Exception as exc:  # pragma: no cover - build-environment dependent
    print(f"graphonlab: skipping compiled kernels ({exc}); using NumPy fallback")

setup(ext_modules=ext_modules)
