import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "vpcircuit._kernels",
        ["src/vpcircuit/_kernels.pyx"],
        include_dirs=[np.get_include()],
        # no fused multiply-add: keeps results bit-identical to the numpy fallback
        extra_compile_args=["-O2", "-ffp-contract=off"],
        # a failed compile leaves the numpy fallback in place
        optional=True,
    )
]

setup(
    ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}),
)
