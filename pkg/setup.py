from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("vidcurate._kernels", ["src/vidcurate/_kernels.pyx"])],
        language_level="3",
    )
except ImportError:
    # No Cython: install without the compiled core; the numpy fallback
    # in vidcurate.kernels is selected automatically at import time.
    ext_modules = []

setup(ext_modules=ext_modules)
