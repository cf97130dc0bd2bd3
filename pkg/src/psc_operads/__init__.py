"""Executable constructions for psc-metrics on spheres and the little disks operad."""

__version__ = "0.1.0"
