"""Build the optional compiled kernel core.

If Cython or a C compiler is unavailable the package still installs and
``sfd.kernels`` falls back to the numpy implementations.
"""
import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pragma: no cover
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "sfd._kernels",
                ["src/sfd/_kernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3", "-fno-builtin-sin", "-fno-builtin-cos", "-fno-builtin-sincos", "-fno-builtin-log", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3", "boundscheck": False, "wraparound": False},
    )

setup(ext_modules=ext_modules)
