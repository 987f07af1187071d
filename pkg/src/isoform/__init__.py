"""Isometric exercise assessment: segmentation, features, grading, feedback."""

__version__ = "0.1.0"
