import os

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

# NOMA_OPT_NO_EXT=1 builds the pure-Python package only.
SKIP_EXT = os.environ.get("NOMA_OPT_NO_EXT", "") not in ("", "0")

ext_modules = []
if cythonize is not None and not SKIP_EXT:
    ext_modules = cythonize(
        [
            Extension(
                "noma_opt._ckernels",
                ["src/noma_opt/_ckernels.pyx"],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )

setup(ext_modules=ext_modules)
