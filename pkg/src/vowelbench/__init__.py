"""Vowel recognition with Gaussian mixtures and RBF networks, plus a benchmark harness."""

from .dataset import Dataset, LabeledPoint, descriptive_stats, load_csv, standin_datasets, synthesize
from .errors import DataError, NumericalError

__version__ = "0.1.0"

__all__ = ["Dataset", "LabeledPoint", "descriptive_stats", "load_csv", "standin_datasets", "synthesize",
           "DataError", "NumericalError"]
