"""Bayesian additive regression trees with oblique (random-hyperplane) splits."""

from .data import Dataset, RawTable, Standardizer, load_csv, split, standardize, train_test
from .model import FitSpec, PosteriorSamples, Prediction, fit, predict
from .sampler import Task
from .tree import DecisionTree, Ensemble, EnsembleConfig, Mode

__all__ = [
    "Dataset",
    "DecisionTree",
    "Ensemble",
    "EnsembleConfig",
    "FitSpec",
    "Mode",
    "PosteriorSamples",
    "Prediction",
    "RawTable",
    "Standardizer",
    "Task",
    "fit",
    "load_csv",
    "predict",
    "split",
    "standardize",
    "train_test",
]

__version__ = "0.1.0"
