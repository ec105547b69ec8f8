# Builds the optional compiled E-step kernel. If Cython or a C compiler is
# unavailable the package still installs; mimo_papr.kernels falls back to the
# pure-numpy implementation at import time.
import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "mimo_papr._estep",
                sources=["src/mimo_papr/_estep.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
