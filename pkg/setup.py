"""Build script for the compiled kernel extension.

The extension is optional: when Cython or a C compiler is unavailable the
package installs without it and falls back to the pure-Python kernels in
``uttlabel._kernels._pyfallback`` at import time.

Note: no ``-ffast-math`` here on purpose — the kernels promise reproducible
IEEE-754 arithmetic and the fallback/compiled equivalence tests rely on it.
"""

from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "uttlabel._kernels._core",
                ["src/uttlabel/_kernels/_core.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
