#!/usr/bin/env python3
# -*- coding: utf-8 -*-

from setuptools import setup, find_packages

scripts = {
  'console_scripts' : [
    'abccs = abccs.cli:main',
  ]
}

setup(
    name = 'abccs',
    description='Approximate Bayesian computation with rescaled composite '
                'score summary statistics',
    version = '0.1',
    classifiers = [
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "Programming Language :: Python :: 3",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    license = "License :: OSI Approved :: BSD License",
    packages = find_packages(exclude=['tests']),
    python_requires = '>=3.8',
    install_requires = [
        'numpy>=1.20',
        'scipy>=1.6',
        'pandas>=1.2',
    ],
    extras_require = {
        'test': ['pytest'],
    },
    zip_safe = False,
    entry_points = scripts,
    include_package_data=True
)
