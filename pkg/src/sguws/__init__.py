"""Unique window size of shrinking-generator keystreams and a neural regressor that predicts it."""

__version__ = "0.1.0"
