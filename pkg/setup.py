import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# No -ffast-math: the Jacobi sweeps rely on strict IEEE rounding for their
# relative accuracy guarantee.
extensions = [
    Extension(
        "wittenlab._kernels",
        ["src/wittenlab/_kernels.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"],
        language="c++",
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
)
