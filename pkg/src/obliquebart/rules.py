"""Prior over decision rules, which doubles as the grow-move proposal.

A new rule at a node is categorical with probability ``p_cat / p`` (or a
configured override); otherwise it is continuous, with a sparse random
direction ``phi`` and a cutpoint uniform over the range of ``phi @ x`` on the
node's polytope.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .polytope import available_levels, leaf_polytope, phi_range
from .tree import CategoricalRule, ContinuousRule, DecisionTree, EnsembleConfig, Mode, Rule

EMPTY_INTERVAL = 1e-12
INTERVAL_TOL = 1e-9


class RuleKind(enum.Enum):
    CONTINUOUS = "continuous"
    CATEGORICAL = "categorical"


@dataclass(frozen=True)
class PhiProposal:
    gamma: np.ndarray
    phi: np.ndarray

    @property
    def is_zero(self) -> bool:
        return not self.gamma.any()


def draw_rule_kind(
    p_cont: int, p_cat: int, rng: np.random.Generator, prob_categorical: float | None = None
) -> RuleKind:
    if p_cont + p_cat < 1:
        raise ValueError("need at least one predictor")
    if prob_categorical is None:
        prob_categorical = p_cat / (p_cont + p_cat)
    if p_cat == 0:
        return RuleKind.CONTINUOUS
    if p_cont == 0:
        return RuleKind.CATEGORICAL
    return RuleKind.CATEGORICAL if rng.random() < prob_categorical else RuleKind.CONTINUOUS


def draw_phi(theta: float, p_cont: int, rng: np.random.Generator) -> PhiProposal:
    """Spike-and-slab direction: Bernoulli(theta) support, normal slab, unit norm."""
    gamma = rng.random(p_cont) < theta
    phi = np.zeros(p_cont)
    k = int(gamma.sum())
    if k:
        phi[gamma] = rng.standard_normal(k)
        norm = np.sqrt(phi @ phi)
        if norm > 0:
            phi /= norm
    return PhiProposal(gamma, phi)


def axis_aligned_phi(p_cont: int, rng: np.random.Generator) -> PhiProposal:
    j = rng.integers(p_cont)
    phi = np.zeros(p_cont)
    phi[j] = 1.0
    return PhiProposal(phi != 0, phi)


def draw_categorical_rule(
    available: frozenset,
    index: int,
    rng: np.random.Generator,
    n_levels: int | None = None,
) -> CategoricalRule:
    """Random subset of the available levels, each kept with probability 1/2.

    With no available levels the rule is degenerate: if `n_levels` is given
    it contains every declared level, so all observations go left.
    """
    if not available:
        return CategoricalRule(index, frozenset(range(n_levels or 0)))
    levels = sorted(available)
    keep = rng.random(len(levels)) < 0.5
    return CategoricalRule(index, frozenset(v for v, k in zip(levels, keep) if k))


def draw_cutpoint(lo: float, hi: float, rng: np.random.Generator) -> float:
    if lo > hi + INTERVAL_TOL:
        raise ValueError(f"empty cutpoint interval [{lo}, {hi}]")
    if hi - lo < EMPTY_INTERVAL:
        return float(lo)
    return float(rng.uniform(lo, hi))


def propose_rule(
    tree: DecisionTree,
    node_id: int,
    theta: float,
    config: EnsembleConfig,
    rng: np.random.Generator,
) -> Rule:
    """Draw a rule for `node_id` from the prior, conditional on its ancestors."""
    kind = draw_rule_kind(config.p_cont, config.p_cat, rng, config.prob_categorical)
    if kind is RuleKind.CATEGORICAL:
        j = int(rng.integers(config.p_cat))
        k = config.n_levels[j]
        return draw_categorical_rule(available_levels(tree, node_id, j, k), j, rng, k)

    if config.mode is Mode.AXIS_ALIGNED:
        phi = axis_aligned_phi(config.p_cont, rng).phi
    else:
        phi = draw_phi(theta, config.p_cont, rng).phi
    if not phi.any():
        return ContinuousRule(phi, 1.0)
    bounds = phi_range(leaf_polytope(tree, node_id, config.p_cont), phi)
    if bounds is None:
        # numerically empty node: send everything left
        return ContinuousRule(phi, float(np.abs(phi).sum()) + 1.0)
    return ContinuousRule(phi, draw_cutpoint(*bounds, rng))
