from setuptools import Extension, setup
from Cython.Build import cythonize

# -ffp-contract=off keeps the C arithmetic bit-identical to CPython's float
# semantics (no fused multiply-add), which the pure-Python fallback relies on.
extensions = [
    Extension(
        "mergeplan._kernel",
        ["src/mergeplan/_kernel.pyx"],
        extra_compile_args=["-O2", "-ffp-contract=off"],
    )
]

setup(
    ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}),
)
