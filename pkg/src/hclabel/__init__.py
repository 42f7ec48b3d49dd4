"""Algorithmic labeling of classes in hierarchical classifications of publications."""

__version__ = "0.1.0"
