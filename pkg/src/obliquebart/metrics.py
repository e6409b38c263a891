"""Out-of-sample error metrics and the paired comparison test."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy.special import stdtr


def rmse(y: np.ndarray, y_hat: np.ndarray) -> float:
    d = np.asarray(y, dtype=float) - np.asarray(y_hat, dtype=float)
    return float(np.sqrt(np.mean(d * d)))


def smse(y_test: np.ndarray, y_hat: np.ndarray, y_train_mean: float) -> float:
    """Squared error of `y_hat` relative to predicting the training mean."""
    y_test = np.asarray(y_test, dtype=float)
    denom = float(np.sum((y_test - y_train_mean) ** 2))
    if denom == 0.0:
        raise ValueError("SMSE undefined: every test outcome equals the training mean")
    return float(np.sum((y_test - np.asarray(y_hat, dtype=float)) ** 2)) / denom


def accuracy(y_test: np.ndarray, labels: np.ndarray) -> float:
    y_test, labels = np.asarray(y_test), np.asarray(labels)
    if y_test.shape != labels.shape:
        raise ValueError("length mismatch")
    return float(np.mean(y_test == labels))


class PairedTest(NamedTuple):
    statistic: float
    pvalue: float
    degenerate: bool


def paired_one_sided_t(errors_a: np.ndarray, errors_b: np.ndarray) -> PairedTest:
    """Paired t-test of H1: mean(errors_a - errors_b) < 0.

    With zero spread in the differences the statistic is infinite (or
    undefined when every difference is zero, reported as p = 0.5); both
    cases set the `degenerate` flag.
    """
    a, b = np.asarray(errors_a, dtype=float), np.asarray(errors_b, dtype=float)
    if a.shape != b.shape or a.size < 2:
        raise ValueError("need two equal-length samples of size >= 2")
    d = a - b
    n = d.size
    mean = d.mean()
    sd = d.std(ddof=1)
    if sd == 0.0:
        if mean == 0.0:
            return PairedTest(float("nan"), 0.5, True)
        t = float("-inf") if mean < 0 else float("inf")
        return PairedTest(t, 0.0 if mean < 0 else 1.0, True)
    t = mean / (sd / np.sqrt(n))
    return PairedTest(float(t), float(stdtr(n - 1, t)), False)
