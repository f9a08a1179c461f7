"""Build hook for the optional compiled kernel extension.

The package is importable without the extension; ``phasefkg.kernels``
falls back to the pure-python implementations when the build is skipped
or fails (``Extension(optional=True)``).
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "phasefkg._ckern",
                ["src/phasefkg/_ckern.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                optional=True,
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
