import warnings

from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize
except ImportError:
    warnings.warn("Cython or numpy missing; installing the pure-Python kernels only.")
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "lipbatch.kernels._ckernels",
                ["src/lipbatch/kernels/_ckernels.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
