from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "bitmod._kernels._core",
                ["src/bitmod/_kernels/_core.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    # Pure-Python fallback is selected at import time if the extension
    # is unavailable.
    ext_modules = []

setup(ext_modules=ext_modules)
