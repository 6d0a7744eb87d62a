"""Shared error hierarchy.

Every domain error raised by this package derives from GraspForgeError so
the CLI can map them uniformly to exit code 1.
"""


class GraspForgeError(Exception):
    """Base class for all domain errors raised by this package."""
