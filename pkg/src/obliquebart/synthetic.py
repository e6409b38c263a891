"""Two-valued synthetic regression surfaces on [-1, 1]^2.

``rotated-axes``: sign of u1*u2 where u is x rotated counter-clockwise by
`theta_param` radians. ``sinusoid``: whether x2 lies above
``theta_param * sin(10 x1)``. Both return ``+delta`` / ``-delta``; outcomes
add unit-variance Gaussian noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import RawTable

FUNCTIONS = ("rotated-axes", "sinusoid")
NOISE_SD = 1.0


@dataclass(frozen=True)
class SyntheticSpec:
    function: str = "rotated-axes"
    theta_param: float = 0.0
    delta: float = 4.0
    n: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.function not in FUNCTIONS:
            raise ValueError(f"function must be one of {FUNCTIONS}")
        if self.function == "rotated-axes" and not 0 <= self.theta_param <= math.pi / 4 + 1e-9:
            raise ValueError("rotation angle must lie in [0, pi/4]")
        if self.function == "sinusoid" and not 0 <= self.theta_param <= 1:
            raise ValueError("amplitude must lie in [0, 1]")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if self.n < 1:
            raise ValueError("n must be positive")


def rotate(x: np.ndarray, angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    x = np.asarray(x, dtype=float)
    return np.stack([c * x[..., 0] - s * x[..., 1], s * x[..., 0] + c * x[..., 1]], axis=-1)


def rotated_axes_f(x: np.ndarray, angle: float, delta: float) -> np.ndarray:
    u = rotate(x, angle)
    return delta * (2.0 * (u[..., 0] * u[..., 1] > 0) - 1.0)


def sinusoid_f(x: np.ndarray, amplitude: float, delta: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return delta * (2.0 * (x[..., 1] > amplitude * np.sin(10.0 * x[..., 0])) - 1.0)


def true_f(spec: SyntheticSpec, x: np.ndarray) -> np.ndarray:
    if spec.function == "rotated-axes":
        return rotated_axes_f(x, spec.theta_param, spec.delta)
    return sinusoid_f(x, spec.theta_param, spec.delta)


def generate(spec: SyntheticSpec) -> tuple[RawTable, np.ndarray]:
    """Sample ``x ~ U([-1, 1]^2)`` and ``y = f(x) + N(0, 1)``; returns the
    table (columns x1, x2, y) and the noiseless f."""
    rng = np.random.default_rng(spec.seed)
    x = rng.uniform(-1.0, 1.0, size=(spec.n, 2))
    f = true_f(spec, x)
    y = f + NOISE_SD * rng.standard_normal(spec.n)
    return RawTable(["x1", "x2"], x, outcome_name="y", y=y), f


def gen_rotated_axes(spec: SyntheticSpec) -> tuple[RawTable, np.ndarray]:
    if spec.function != "rotated-axes":
        raise ValueError("spec is not a rotated-axes spec")
    return generate(spec)


def gen_sinusoid(spec: SyntheticSpec) -> tuple[RawTable, np.ndarray]:
    if spec.function != "sinusoid":
        raise ValueError("spec is not a sinusoid spec")
    return generate(spec)
