#!/usr/bin/python
# -*- encoding: utf-8 -*-
import ast
import re

from setuptools import find_packages
from setuptools import setup

## The version number lives in freemult/__init__.py only; it is read
## from there without importing the package (which needs numpy).
_version_re = re.compile(r"__version__\s+=\s+(.*)")
with open("freemult/__init__.py", "rb") as f:
    version = str(
        ast.literal_eval(_version_re.search(f.read().decode("utf-8")).group(1))
    )

if __name__ == "__main__":
    test_packages = [
        "pytest",
        "pytest-coverage",
        "coverage",
    ]

    setup(
        name="freemult",
        version=version,
        description="Operator-valued free multiplicative convolution by subordination",
        long_description=open("README.md").read(),
        long_description_content_type="text/markdown",
        classifiers=[
            "Development Status :: 3 - Alpha",
            "Intended Audience :: Science/Research",
            "License :: OSI Approved :: Apache Software License",
            "Operating System :: OS Independent",
            "Programming Language :: Python :: 3",
            "Topic :: Scientific/Engineering :: Mathematics",
        ],
        keywords="free probability, random matrices, subordination, spectral density",
        license="Apache-2.0",
        packages=find_packages(exclude=["tests"]),
        package_data={"freemult": ["configs/*.json"]},
        include_package_data=True,
        zip_safe=False,
        python_requires=">=3.8",
        install_requires=[
            "numpy>=1.20",
            "scipy>=1.6",
            "lxml",
        ],
        tests_require=test_packages,
        extras_require={
            "test": test_packages,
        },
        entry_points={
            "console_scripts": ["freemult=freemult.cli:main"],
        },
    )
