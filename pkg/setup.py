import numpy
from setuptools import Extension, setup

# The compiled stencil kernels are optional: the package falls back to the
# numpy implementation in chiralab.kernels if the extension is absent.
try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "chiralab._stencil_cy",
                sources=["src/chiralab/_stencil_cy.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
