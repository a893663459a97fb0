import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# -ffp-contract=off keeps a*b+c unfused so the compiled kernel matches the
# pure-Python fallback bit for bit.
extensions = [
    Extension(
        "delaylim._ckernel",
        ["src/delaylim/_ckernel.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3", "-ffp-contract=off", "-std=c++17"],
        language="c++",
    )
]

setup(ext_modules=cythonize(extensions, language_level=3))
