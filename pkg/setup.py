import os

from setuptools import setup

ext_modules = []
if not os.environ.get("ELLMOD_PURE"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(["src/ellmod/_kernels.pyx"], quiet=True)
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
