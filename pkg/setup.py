#!/usr/bin/env python3
"""
Setup script for householder-mala
"""

from setuptools import setup, find_packages

# Read requirements from requirements.txt
def read_requirements():
    with open('requirements.txt', 'r') as f:
        return [line.strip() for line in f if line.strip() and not line.startswith('#')]

setup(
    name="householder-mala",
    version="0.1.0",
    description="Adaptive MALA with a Householder eigen-preconditioner, plus a benchmark harness",
    author="hhmala developers",
    packages=find_packages(where="src", exclude=["*.tests", "*.tests.*"]),
    package_dir={"": "src"},
    install_requires=read_requirements(),
    python_requires=">=3.10",
    entry_points={"console_scripts": ["hhmala-bench=hhmala_bench.main:main"]},
    include_package_data=True,
    zip_safe=False,
)
