#!/usr/bin/env python3
"""Minimal setup.py for editable installs"""
from setuptools import find_packages, setup

# Read version from adaptive_wave/version.py
version = {}
with open("adaptive_wave/version.py") as fp:
    exec(fp.read(), version)

setup(
    name="adaptive-wave",
    version=version["__version__"],
    packages=find_packages(include=["adaptive_wave", "adaptive_wave.*"]),
    install_requires=[
        "numpy>=1.26.0",
        "scipy>=1.11.0",
        "pydantic>=2.4.2",
        "python-dotenv>=1.0.0",
        "psutil>=7.0.0",
    ],
    extras_require={
        "test": [
            "pytest>=7.4.0",
            "pytest-mock>=3.11.1",
            "pytest-cov>=4.1.0",
        ],
    },
    entry_points={"console_scripts": ["adaptive-wave=adaptive_wave.cli:main"]},
    python_requires=">=3.10",
)
