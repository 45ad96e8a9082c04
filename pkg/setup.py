#!/usr/bin/env python3
"""
Setup script for the frobound package.
"""

from setuptools import setup, find_packages

with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

with open("requirements.txt", "r", encoding="utf-8") as fh:
    requirements = [line.split("#")[0].strip() for line in fh if line.split("#")[0].strip()]

setup(
    name="frobound",
    version="0.1.0",
    author="frobound developers",
    description="Pole-order bounds for Frobenius structures on p-adic differential equations, with experiments",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=["tests", "examples*"]),
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    python_requires=">=3.9",
    install_requires=requirements,
    entry_points={
        "console_scripts": [
            "frobound=frobound.main:console_main",
        ],
    },
    include_package_data=True,
)
