import numpy as np
from setuptools import setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/requery/kernels/_fast.pyx"],
        compiler_directives={"language_level": "3"},
    )
    for ext in ext_modules:
        ext.include_dirs.append(np.get_include())
        ext.extra_compile_args = ["-O3"]
except ImportError:
    # Pure-python kernels are used when the extension cannot be built.
    ext_modules = None

setup(ext_modules=ext_modules)
