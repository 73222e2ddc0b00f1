#!/usr/bin/env python
"""
Install tabkey using setuptools
"""
from setuptools import find_packages, setup

with open('tabkey/version.py', 'r') as f:
    version = None
    exec(f.read())

with open('README.rst', 'r') as f:
    readme = f.read()

setup(
    name='tabkey',
    version=version,
    description='Measure how many keystrokes a next-token predictor saves in an emulated autocomplete',
    long_description=readme,
    author='Neon Jungle',
    author_email='developers@neonjungle.studio',

    install_requires=[
        'Django>=3.2',
        'numpy>=1.20',
        'requests>=2.26',
        'tokenizers>=0.15',
    ],
    extras_require={
        'test': ['hypothesis>=6.0'],
    },
    setup_requires=[
        'wheel'
    ],
    zip_safe=False,
    license='BSD License',

    packages=find_packages(exclude=['tests*']),

    include_package_data=True,
    package_data={'tabkey': ['templates/tabkey/*.html']},

    entry_points={
        'console_scripts': ['tabkey=tabkey.__main__:run'],
    },

    classifiers=[
        'Environment :: Console',
        'Intended Audience :: Science/Research',
        'Operating System :: OS Independent',
        'Programming Language :: Python',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Framework :: Django',
        'License :: OSI Approved :: BSD License',
        'Topic :: Scientific/Engineering :: Artificial Intelligence',
    ],
)
