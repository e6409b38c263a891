"""Fit/predict orchestration: hyperparameter calibration, chains, summaries."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import ndtr
from scipy.stats import chi2

from .data import Dataset, Standardizer
from .sampler import ChainDiagnostics, FitState, Task, gibbs_iteration
from .tree import Ensemble, EnsembleConfig, Mode

# latent span covered by +-k*tau for probit models
PROBIT_HALF_SPAN = 3.0


def calibrate_tau(y_min: float, y_max: float, k: float = 2.0) -> float:
    """Marginal prior sd of f(x) such that +-k*tau spans [y_min, y_max]."""
    if not y_min < y_max:
        raise ValueError("outcome is constant; cannot calibrate tau")
    return (y_max - y_min) / (2.0 * k)


def calibrate_lambda(s2: float, nu: float, q: float = 0.9) -> float:
    """Scale such that P(sigma^2 < s2) = q under sigma^2 ~ IG(nu/2, nu*lam/2)."""
    if not s2 > 0:
        raise ValueError("outcome variance must be positive")
    return s2 * chi2.ppf(1.0 - q, nu) / nu


@dataclass
class FitSpec:
    task: Task = Task.REGRESSION
    M: int = 200
    burn: int = 1000
    kept: int = 1000
    chains: int = 1
    seed: int = 0
    mode: Mode = Mode.OBLIQUE
    alpha: float = 0.95
    beta: float = 2.0
    nu: float = 3.0
    q: float = 0.9
    k: float = 2.0
    a_theta: float | None = None
    b_theta: float | None = None
    prob_categorical: float | None = None

    def __post_init__(self):
        self.task = Task(self.task)
        self.mode = Mode(self.mode)
        if self.burn < 0 or self.kept < 1 or self.chains < 1:
            raise ValueError("need burn >= 0, kept >= 1 and chains >= 1")

    @classmethod
    def fast(cls, **kwargs) -> FitSpec:
        """Reduced budget for tests and quick benchmarks: 50 trees, 500 + 500."""
        kwargs = {"M": 50, "burn": 500, "kept": 500, **kwargs}
        return cls(**kwargs)


def theta_prior(M: int, p_cont: int) -> tuple[float, float]:
    """Beta(a, b) with a = M and prior mean 1/p_cont."""
    if p_cont <= 1:
        return float(M), 1.0
    return float(M), float(M * (p_cont - 1))


def build_config(data: Dataset, spec: FitSpec) -> EnsembleConfig:
    if data.p_cont + data.p_cat == 0:
        raise ValueError("no predictors")
    if spec.task is Task.REGRESSION:
        tau = calibrate_tau(float(data.y.min()), float(data.y.max()), spec.k)
        lam = calibrate_lambda(float(np.var(data.y, ddof=1)) if data.n > 1 else 1.0, spec.nu, spec.q)
    else:
        tau = PROBIT_HALF_SPAN / spec.k
        lam = 1.0
    a_default, b_default = theta_prior(spec.M, data.p_cont)
    return EnsembleConfig(
        M=spec.M,
        alpha=spec.alpha,
        beta=spec.beta,
        tau=tau,
        nu=spec.nu,
        lam=lam,
        a_theta=spec.a_theta if spec.a_theta is not None else a_default,
        b_theta=spec.b_theta if spec.b_theta is not None else b_default,
        p_cont=data.p_cont,
        n_levels=data.n_levels,
        mode=spec.mode,
        prob_categorical=spec.prob_categorical,
    )


def chain_rng(seed: int, chain: int) -> np.random.Generator:
    """Chain `chain` draws from ``SeedSequence(seed).spawn(...)[chain]``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(chain,)))


@dataclass
class PosteriorSamples:
    draws: list[Ensemble]
    config: EnsembleConfig
    task: Task
    y_center: float = 0.0
    y_scale: float = 1.0
    diagnostics: list[ChainDiagnostics] = field(default_factory=list)
    standardizer: Standardizer | None = None
    burn: int = 0

    def latent(self, x_cont: np.ndarray, x_cat: np.ndarray | None = None) -> np.ndarray:
        """Standardized-scale f for every draw: shape (draws, rows)."""
        x_cont = np.asarray(x_cont, dtype=float)
        return np.stack([ens.predict(x_cont, x_cat) for ens in self.draws])


@dataclass
class Prediction:
    mean: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    prob: np.ndarray | None = None
    label: np.ndarray | None = None


def fit(
    data: Dataset,
    spec: FitSpec,
    callback: Callable[[int, FitState], None] | None = None,
) -> PosteriorSamples:
    """Run ``chains x (burn + kept)`` sweeps and keep the post-burn ensembles.

    `callback(chain, state)` is called after every sweep, e.g. to collect
    extra statistics.
    """
    if data.y is None:
        raise ValueError("dataset has no outcome")
    config = build_config(data, spec)
    draws: list[Ensemble] = []
    diagnostics = []
    for chain in range(spec.chains):
        rng = chain_rng(spec.seed, chain)
        state = FitState(
            Ensemble.initial(config), data.x_cont, data.x_cat, data.y, spec.task, rng
        )
        for it in range(spec.burn + spec.kept):
            gibbs_iteration(state)
            if it >= spec.burn:
                draws.append(state.ensemble.copy())
            if callback is not None:
                callback(chain, state)
        diagnostics.append(state.diagnostics)
    scaler = data.standardizer
    return PosteriorSamples(
        draws,
        config,
        spec.task,
        scaler.y_center if scaler is not None else 0.0,
        scaler.y_scale if scaler is not None else 1.0,
        diagnostics,
        scaler,
        spec.burn,
    )


def predict(
    samples: PosteriorSamples,
    x_cont: np.ndarray | Dataset,
    x_cat: np.ndarray | None = None,
) -> Prediction:
    """Posterior mean and 95% band per row; for classification also the
    posterior mean of Phi(f) and its 0.5-threshold label (ties go to 0)."""
    if isinstance(x_cont, Dataset):
        x_cont, x_cat = x_cont.x_cont, x_cont.x_cat
    x_cont = np.asarray(x_cont, dtype=float)
    if x_cont.ndim != 2 or x_cont.shape[1] != samples.config.p_cont:
        raise ValueError(f"expected {samples.config.p_cont} continuous columns")
    if samples.config.p_cat:
        x_cat = np.asarray(x_cat, dtype=np.int64)
        if x_cat.ndim != 2 or x_cat.shape[1] != samples.config.p_cat:
            raise ValueError(f"expected {samples.config.p_cat} categorical columns")
    f = samples.latent(x_cont, x_cat)
    if samples.task is Task.REGRESSION:
        f = samples.y_center + samples.y_scale * f
    lower, upper = np.quantile(f, [0.025, 0.975], axis=0)
    out = Prediction(f.mean(axis=0), lower, upper)
    if samples.task is Task.CLASSIFICATION:
        out.prob = ndtr(f).mean(axis=0)
        out.label = (out.prob > 0.5).astype(np.int64)
    return out


def posterior_mean_sigma(samples: PosteriorSamples) -> float:
    """Posterior mean of sigma on the original outcome scale."""
    return float(np.mean([math.sqrt(e.sigma2) for e in samples.draws]) * samples.y_scale)
