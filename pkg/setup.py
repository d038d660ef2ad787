import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("MODPOLAR_NO_EXT", "") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [Extension("modpolar._ext.commutators", ["src/modpolar/_ext/commutators.pyx"],
                       extra_compile_args=["-O3"])],
            language_level=3,
        )

setup(ext_modules=ext_modules)
