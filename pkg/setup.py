import os

import numpy as np
from setuptools import Extension, setup

# The compiled stepping kernel is optional; plaplab falls back to numpy
# when the extension is missing.
ext_modules = []
if os.environ.get("PLAPLAB_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "plaplab._step",
                    ["src/plaplab/_step.pyx"],
                    include_dirs=[np.get_include()],
                    # no fast-math and no contraction: the kernel must match
                    # the numpy fallback bit for bit
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
