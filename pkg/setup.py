from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

# -ffp-contract=off keeps double arithmetic identical to the pure-Python
# kernels (no FMA contraction), which the bit-reproducibility tests rely on.
extensions = [
    Extension(
        "commap._kernels",
        ["src/commap/_kernels.pyx"],
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
]

if cythonize is not None:
    ext_modules = cythonize(extensions, language_level=3)
else:
    ext_modules = []

setup(ext_modules=ext_modules)
