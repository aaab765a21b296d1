"""Build script: compiles the beam-search hot kernel unless MBMSIM_NO_EXT=1.

The package works without the extension (a pure-numpy kernel is selected at
import time), so a failed compile only costs speed. ``-march=native`` is used
when the local compiler accepts it; set MBMSIM_PORTABLE=1 to build a generic
binary instead.
"""

import os
import shutil
import subprocess
import tempfile

from setuptools import Extension, setup


def _compiler_accepts(flag: str) -> bool:
    cc = os.environ.get("CC", "cc")
    if shutil.which(cc) is None:
        return False
    with tempfile.TemporaryDirectory() as tmp:
        src = os.path.join(tmp, "probe.c")
        with open(src, "w") as fh:
            fh.write("int main(void){return 0;}\n")
        try:
            r = subprocess.run([cc, flag, "-o", os.path.join(tmp, "probe"), src],
                               capture_output=True, timeout=30)
        except Exception:
            return False
        return r.returncode == 0


ext_modules = []
if os.environ.get("MBMSIM_NO_EXT") != "1":
    try:
        import numpy
        from Cython.Build import cythonize

        compile_args = ["-O3"]
        if os.environ.get("MBMSIM_PORTABLE") != "1" and _compiler_accepts("-march=native"):
            compile_args.append("-march=native")
        ext_modules = cythonize(
            [
                Extension(
                    "mbmsim._kernels._beamsearch",
                    sources=["src/mbmsim/_kernels/_beamsearch.pyx"],
                    include_dirs=[numpy.get_include()],
                    extra_compile_args=compile_args,
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
