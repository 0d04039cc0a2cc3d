import os

from setuptools import Extension, setup


def extensions():
    if os.environ.get("BESTQUOTE_NO_EXT"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "bestquote._simkernel",
        ["src/bestquote/_simkernel.pyx"],
        extra_compile_args=["-O2", "-fno-fast-math"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=extensions())
