#!/usr/bin/env python
# -*- coding: utf-8 -*-
import re
from setuptools import setup, find_packages


def read(fname):
    with open(fname) as fp:
        content = fp.read()
    return content


def find_version(fname):
    match = re.search(r"^__version__ = ['\"]([^'\"]*)['\"]", read(fname), re.M)
    if not match:
        raise RuntimeError('Unable to find version string in %s' % fname)
    return match.group(1)


setup(
    name='spinergy',
    version=find_version('spinergy/__init__.py'),
    description=('Numerics of the spinorial energy on surfaces'),
    long_description=read('README.rst'),
    author='spinergy developers',
    packages=find_packages(exclude=['tests', 'docs']),
    include_package_data=True,
    license='MIT',
    zip_safe=False,
    keywords=('spinor', 'dirac', 'energy', 'gradient flow', 'willmore',
              'weierstrass', 'torus', 'numerics'),
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: MIT License',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.11',
        'Programming Language :: Python :: 3.12',
        'Programming Language :: Python :: Implementation :: CPython',
        'Topic :: Scientific/Engineering :: Mathematics',
    ],
    python_requires='>=3.11',
    install_requires=[
        'lollipop>=1.1.8',
        'numpy>=1.24',
        'scipy>=1.12',
    ],
    entry_points={
        'console_scripts': ['spinergy = spinergy.cli:main'],
    },
    tests_require=['pytest'],
)
