"""Build the optional compiled kernels.

The extension is marked optional: if Cython or a C compiler is missing the
package still installs and runs on the pure-Python kernels.
"""
from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize
except ImportError:  # pragma: no cover - build without the toolchain
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "urq._kernels",
                ["src/urq/_kernels.pyx"],
                include_dirs=[np.get_include()],
                # no FMA contraction: codes must match the numpy path bit for bit
                extra_compile_args=["-O3", "-ffp-contract=off"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
