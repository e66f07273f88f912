#!/usr/bin/env python
# -*- coding:utf-8 -*-
from setuptools import setup

setup(name='orbitrace',
      version='0.1.0',
      description='Semiclassical quantization of pseudo-Hermitian Hamiltonians by complex periodic orbits.',
      python_requires='>=3.10',
      packages=['modules', 'utils'],
      py_modules=['config', 'spectrum', 'orbit', 'spin', 'verify'],
      install_requires=['numpy', 'torch', 'tensorboardX', 'terminaltables',
                        'tomli; python_version < "3.11"'],
      extras_require={'test': ['pytest', 'hypothesis']})
