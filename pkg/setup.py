from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "cmlab._searchcore",
                ["src/cmlab/_searchcore.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    # The package still works without the compiled engine; cmlab.search
    # falls back to the pure-Python twin at import time.
    extensions = []

setup(ext_modules=extensions)
