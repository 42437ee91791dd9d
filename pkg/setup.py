#!/usr/bin/env python
from os.path import exists

from setuptools import setup


setup(
    name="ascg",
    version="0.1.0",
    description="Away-steps conditional gradient over polytopes with rate certificates",
    url="http://github.com/pythological/ascg",
    license="BSD",
    packages=["ascg"],
    install_requires=[
        "toolz",
        "multipledispatch",
        "typing_extensions",
        "numpy >= 1.20",
        "scipy >= 1.6",
    ],
    package_data={
        "ascg": ["py.typed"],
    },
    entry_points={"console_scripts": ["ascg = ascg.cli:main"]},
    tests_require=["pytest", "sympy", "hypothesis"],
    long_description=open("README.md").read() if exists("README.md") else "",
    long_description_content_type="text/markdown",
    zip_safe=False,
    python_requires=">=3.8",
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "Intended Audience :: Developers",
        "License :: OSI Approved :: BSD License",
        "Operating System :: OS Independent",
        "Programming Language :: Python",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: Implementation :: CPython",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
)
