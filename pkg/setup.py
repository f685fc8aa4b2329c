"""Build script.  The compiled kernel extension is optional: if Cython or a C
compiler is unavailable the package installs with the pure-Python backend only.
Set NAMEGRAPH_NO_EXT=1 to skip the extension on purpose."""

import os

from setuptools import setup

ext_modules = []
if not os.environ.get("NAMEGRAPH_NO_EXT"):
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "namegraph.kernels._core",
                    ["src/namegraph/kernels/_core.pyx"],
                    include_dirs=[numpy.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            language_level=3,
        )
    except Exception as exc:  # pragma: no cover - depends on build environment
        print(f"namegraph: compiled kernels skipped ({exc}); using pure-Python backend")

setup(ext_modules=ext_modules)
