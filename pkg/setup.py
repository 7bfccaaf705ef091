import os

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

# -ffp-contract=off keeps the compiled kernel bit-identical to the pure-Python
# engine: no fused multiply-adds, every operation rounded like CPython floats.
# -march can be overridden for portable binaries (results do not depend on it,
# only elementwise IEEE operations are vectorized).
cflags = os.environ.get(
    "GROWBOTS_CFLAGS",
    "-O3 -ffp-contract=off -fno-math-errno -fopenmp-simd -march=native",
).split()

ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "growbots.engine._core",
                sources=[
                    "src/growbots/engine/_core.pyx",
                    "src/growbots/engine/_kernel.c",
                ],
                extra_compile_args=cflags,
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
