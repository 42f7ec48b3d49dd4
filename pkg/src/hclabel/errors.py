"""Exception types shared across the package."""


class HCLabelError(Exception):
    """Base class for errors raised by hclabel."""


class InputError(HCLabelError):
    """Fatal problem with an input file (missing, unreadable, empty, inconsistent)."""


class HierarchyError(HCLabelError):
    """Structural problem in a class hierarchy (cycle, disjointness violation)."""


class ScoreError(HCLabelError, ValueError):
    """A weighting score is undefined for the given statistics."""
