"""Random-rotation feature augmentation for the axis-aligned baseline."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RotationSpec:
    R: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.R < 1:
            raise ValueError("R must be at least 1")


def random_rotation(p: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed element of SO(p) via sign-corrected QR."""
    q, r = np.linalg.qr(rng.standard_normal((p, p)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


@dataclass
class RandomRotation:
    """R rotations of the continuous block, concatenated, with each output
    column rescaled to [-1, 1] by training min/max."""

    rotations: list[np.ndarray]
    col_min: np.ndarray
    col_max: np.ndarray

    @classmethod
    def fit(cls, x: np.ndarray, spec: RotationSpec, identity: bool = False) -> RandomRotation:
        x = np.asarray(x, dtype=float)
        p = x.shape[1]
        rng = np.random.default_rng(spec.seed)
        if identity:
            rotations = [np.eye(p) for _ in range(spec.R)]
        else:
            rotations = [random_rotation(p, rng) for _ in range(spec.R)]
        raw = np.hstack([x @ q for q in rotations])
        return cls(rotations, raw.min(axis=0), raw.max(axis=0))

    def transform(self, x: np.ndarray) -> np.ndarray:
        raw = np.hstack([np.asarray(x, dtype=float) @ q for q in self.rotations])
        span = self.col_max - self.col_min
        safe = np.where(span > 0, span, 1.0)
        return np.where(span > 0, 2.0 * (raw - self.col_min) / safe - 1.0, 0.0)


def random_rotation_transform(
    x: np.ndarray, spec: RotationSpec, identity: bool = False
) -> tuple[np.ndarray, RandomRotation]:
    """Augmented training block of width ``R * p`` and the fitted transform
    (reuse it on test rows)."""
    rot = RandomRotation.fit(x, spec, identity)
    return rot.transform(x), rot
