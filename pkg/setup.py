from setuptools import Extension, setup


def get_extensions():
    """Compiled kernels; an empty list leaves the pure-Python fallback in charge."""
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        print("WARNING: Cython/numpy not available at build time, using pure Python kernels.")
        return []

    extensions = [
        Extension(
            "survmixclust._kernels",
            sources=["src/survmixclust/_kernels.pyx"],
            include_dirs=[np.get_include()],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            extra_compile_args=["-O3"],
        )
    ]
    return cythonize(
        extensions,
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )


setup(ext_modules=get_extensions())
