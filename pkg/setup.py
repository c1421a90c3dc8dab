"""Build script: compiles the optional rasterizer extension.

The package is fully functional without the extension (a numpy fallback is
selected at import time); the compiled kernel just makes the tube-grid hot
loop much faster.  If Cython or a C compiler is missing we install pure.
"""
import sys

from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "kakeyalab._kernels._rastercore",
                ["src/kakeyalab/_kernels/_rastercore.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - build environment dependent
    sys.stderr.write(f"kakeyalab: building without compiled kernel ({exc})\n")

setup(ext_modules=ext_modules)
