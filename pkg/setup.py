"""Build script: compiles the optional geometry kernel extension.

The package is fully functional without the extension; a pure-Python
twin of every kernel is selected at import time if the compiled module
is absent (see sheaffuse._kernels).  Metadata is duplicated from
pyproject.toml so legacy setuptools flows (old `setup.py develop`
paths) still resolve the src layout correctly.
"""

import sys

from setuptools import find_packages, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/sheaffuse/_kernels/_fast.pyx"],
        language_level=3,
        compiler_directives={"boundscheck": False, "cdivision": True},
    )
except Exception as exc:  # Cython missing or no compiler: install pure-Python only
    sys.stderr.write(f"sheaffuse: skipping compiled kernels ({exc})\n")

setup(
    name="sheaffuse",
    version="0.1.0",
    package_dir={"": "src"},
    packages=find_packages("src"),
    ext_modules=ext_modules,
    install_requires=["numpy>=1.24"],
    entry_points={"console_scripts": ["sheafctl = sheaffuse.cli:main"]},
    python_requires=">=3.10",
)
