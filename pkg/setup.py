from codecs import open
from os import path

from setuptools import setup, find_packages

from icdb.__about__ import *

here = path.abspath(path.dirname(__file__))

with open(path.join(here, 'README.md')) as f:
    long_description = f.read()

setup(
    name=__name__,
    version=__version__,
    description=__description__,
    long_description=long_description,
    url=__url__,
    author=__author__,
    python_requires='>=3.8, <4',
    packages=find_packages(exclude=['docs', 'examples', 'examples.*']),
    include_package_data=True,
    package_data={
        'rewrite': ['fixtures/*.yaml'],
    },
    install_requires=[
        'Django~=4.2',
        'django-q2~=1.6',
        'djangorestframework~=3.14',
        'numpy~=1.24',
        'pycryptodome~=3.19',
        'PyYAML~=6.0',
        'sqlparse~=0.4',
    ],
    extras_require={
        'dev': [
            'bumpversion~=0.6',
            'coverage~=7.3',
            'flake8~=6.1',
            'hypothesis~=6.88',
            'setuptools>=68',
        ],
        'mysql': [
            'mysqlclient~=2.2',
        ],
        'postgres': [
            'psycopg2-binary~=2.9',
        ],
    },
    entry_points={
        'console_scripts': [
            'icdb = icdb.cli:main',
        ],
    },
)
