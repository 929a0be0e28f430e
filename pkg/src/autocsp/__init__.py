"""Homomorphism problems for finite and automatic relational structures."""

__version__ = "0.1.0"
