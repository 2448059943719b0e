__all__ = [
    '__name__',
    '__version__',
    '__description__',
    '__url__',
    '__author__',
]

__name__ = 'icdb'
__version__ = '0.1.0'
__description__ = 'Integrity coded databases: conversion, query rewriting, verification and overhead benchmarks.'
__url__ = 'https://github.com/icdb-toolchain/icdb'
__author__ = 'ICDB contributors'
