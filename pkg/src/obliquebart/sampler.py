"""Metropolis-within-Gibbs sampler for oblique tree ensembles.

Each sweep updates every tree with one grow-or-prune Metropolis-Hastings step
followed by conjugate leaf draws, then redraws the noise variance and the
rule-sparsity parameter. Classification adds an Albert-Chib latent step at the
start of each sweep, with the noise variance pinned at 1.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .rules import propose_rule
from .tree import ContinuousRule, DecisionTree, Ensemble, EnsembleConfig, Mode
from .truncnorm import probit_latents


class Task(enum.Enum):
    REGRESSION = "regression"
    CLASSIFICATION = "classification"


@dataclass(frozen=True)
class SuffStats:
    """Node statistics: count, posterior precision, precision-weighted sum."""

    n: int
    P: float
    Theta: float


def suffstats(n: int, total: float, sigma2: float, tau: float) -> SuffStats:
    return SuffStats(int(n), n / sigma2 + 1.0 / (tau * tau), total / sigma2)


def node_suffstats(residuals: np.ndarray, sigma2: float, tau: float) -> SuffStats:
    residuals = np.asarray(residuals, dtype=float)
    return suffstats(residuals.size, float(residuals.sum()), sigma2, tau)


def _log_leaf(s: SuffStats) -> float:
    # leaf factor of the integrated likelihood, without the tau^-1 constant
    return -0.5 * math.log(s.P) + s.Theta * s.Theta / (2.0 * s.P)


def log_structure_ratio(depth: int, alpha: float, beta: float) -> float:
    """Log prior odds of splitting a depth-`depth` leaf into two leaves."""
    p_split = alpha * (1.0 + depth) ** -beta
    p_child = alpha * (2.0 + depth) ** -beta
    if p_split >= 1.0:
        raise ValueError("split probability must be below 1")
    return math.log(p_split) + 2.0 * math.log1p(-p_child) - math.log1p(-p_split)


def log_fit_ratio(parent: SuffStats, left: SuffStats, right: SuffStats, tau: float) -> float:
    """Log marginal-likelihood ratio of splitting `parent` into two children."""
    return -math.log(tau) + _log_leaf(left) + _log_leaf(right) - _log_leaf(parent)


def log_grow_ratio(
    parent: SuffStats,
    left: SuffStats,
    right: SuffStats,
    depth: int,
    nleaf: int,
    nnog_after: int,
    alpha: float,
    beta: float,
    tau: float,
) -> float:
    """Log Metropolis-Hastings ratio of a grow move (rule proposed from its prior).

    `nleaf` counts leaves of the current tree, `nnog_after` nog nodes of the
    proposed one.
    """
    return (
        log_structure_ratio(depth, alpha, beta)
        + math.log(nleaf)
        - math.log(nnog_after)
        + log_fit_ratio(parent, left, right, tau)
    )


def log_prune_ratio(
    parent: SuffStats,
    left: SuffStats,
    right: SuffStats,
    depth: int,
    nnog: int,
    nleaf_after: int,
    alpha: float,
    beta: float,
    tau: float,
) -> float:
    """Log Metropolis-Hastings ratio of a prune move; `nnog` is counted on the
    current tree and `nleaf_after` on the pruned one."""
    return (
        -log_structure_ratio(depth, alpha, beta)
        + math.log(nnog)
        - math.log(nleaf_after)
        - log_fit_ratio(parent, left, right, tau)
    )


def grow_acceptance(parent, left, right, depth, nleaf, nnog_after, config: EnsembleConfig) -> float:
    log_r = log_grow_ratio(
        parent, left, right, depth, nleaf, nnog_after, config.alpha, config.beta, config.leaf_sd
    )
    return 1.0 if log_r >= 0 else math.exp(log_r)


def prune_acceptance(parent, left, right, depth, nnog, nleaf_after, config: EnsembleConfig) -> float:
    log_r = log_prune_ratio(
        parent, left, right, depth, nnog, nleaf_after, config.alpha, config.beta, config.leaf_sd
    )
    return 1.0 if log_r >= 0 else math.exp(log_r)


@dataclass
class ChainDiagnostics:
    """Per-iteration summaries of one chain."""

    FIELDS = (
        "iter",
        "sigma2",
        "theta",
        "mean_depth",
        "total_leaves",
        "grow_accept_rate",
        "prune_accept_rate",
        "axis_aligned_rule_fraction",
    )

    rows: list[tuple] = field(default_factory=list)
    grow_proposed: int = 0
    grow_accepted: int = 0
    prune_proposed: int = 0
    prune_accepted: int = 0

    def column(self, name: str) -> np.ndarray:
        k = self.FIELDS.index(name)
        return np.array([row[k] for row in self.rows], dtype=float)

    def to_text(self, sep: str = ",", start: int = 0) -> str:
        lines = [sep.join(self.FIELDS)]
        for row in self.rows[start:]:
            lines.append(
                sep.join(str(v) if isinstance(v, int) else format(v, ".17g") for v in row)
            )
        return "\n".join(lines) + "\n"


def rule_census(ensemble: Ensemble) -> tuple[int, int, int, int]:
    """(nonzero phi entries, zero phi entries, continuous rules, axis-aligned rules)."""
    nonzero = zero = n_rules = n_axis = 0
    for tree in ensemble.trees:
        for rule in tree.rules():
            if isinstance(rule, ContinuousRule):
                k = rule.nonzero_count
                nonzero += k
                zero += rule.phi.size - k
                n_rules += 1
                n_axis += k == 1
    return nonzero, zero, n_rules, n_axis


@dataclass
class MoveRecord:
    move: str
    accepted: bool


class FitState:
    """Mutable chain state: ensemble, cached per-tree fits, and leaf maps.

    Parameters
    ----------
    ensemble
        Starting ensemble; usually `Ensemble.initial`.
    x_cont, x_cat
        Standardized predictors (``n x p_cont`` floats, ``n x p_cat`` codes).
    y
        Standardized outcome (regression) or 0/1 labels (classification).
    """

    def __init__(
        self,
        ensemble: Ensemble,
        x_cont: np.ndarray,
        x_cat: np.ndarray | None,
        y: np.ndarray,
        task: Task = Task.REGRESSION,
        rng: np.random.Generator | None = None,
    ):
        self.ensemble = ensemble
        n = len(y)
        self.x_cont = np.ascontiguousarray(x_cont, dtype=float).reshape(n, ensemble.config.p_cont)
        if x_cat is None:
            x_cat = np.zeros((n, 0), dtype=np.int64)
        self.x_cat = np.asarray(x_cat, dtype=np.int64).reshape(n, ensemble.config.p_cat)
        self.y = np.asarray(y, dtype=float)
        self.task = Task(task)
        self.rng = rng if rng is not None else np.random.default_rng()
        M = ensemble.config.M
        self.fits = np.empty((M, n))
        self.leaf_of = np.empty((M, n), dtype=np.int64)
        for m, tree in enumerate(ensemble.trees):
            self.leaf_of[m] = tree.apply(self.x_cont, self.x_cat)
            self.fits[m] = tree.predict(self.x_cont, self.x_cat)
        self.total = self.fits.sum(axis=0)
        if self.task is Task.CLASSIFICATION:
            ensemble.sigma2 = 1.0
            self.target = probit_latents(self.total, self.y, self.rng)
        else:
            self.target = self.y.copy()
        self.iteration = 0
        self.diagnostics = ChainDiagnostics()

    @property
    def n(self) -> int:
        return self.y.size

    @property
    def config(self) -> EnsembleConfig:
        return self.ensemble.config


def partial_residuals(state: FitState, m: int) -> np.ndarray:
    return state.target - state.total + state.fits[m]


def draw_leaf_outputs(
    tree: DecisionTree,
    leaf_of: np.ndarray,
    residuals: np.ndarray,
    sigma2: float,
    tau: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Draw every leaf output from N(Theta/P, 1/P) in place.

    Returns the id-indexed table of leaf outputs (NaN at non-leaf ids).
    """
    ids = np.array(tree.leaf_ids(), dtype=np.int64)
    counts = np.bincount(leaf_of, minlength=tree.next_id)[ids]
    sums = np.bincount(leaf_of, weights=residuals, minlength=tree.next_id)[ids]
    P = counts / sigma2 + 1.0 / (tau * tau)
    mu = sums / sigma2 / P + rng.standard_normal(ids.size) / np.sqrt(P)
    table = np.full(tree.next_id, math.nan)
    table[ids] = mu
    nodes = tree.nodes
    for i, v in zip(ids.tolist(), mu.tolist()):
        nodes[i].mu = v
    return table


def update_tree(state: FitState, m: int, rng: np.random.Generator) -> MoveRecord:
    """One grow-or-prune MH step on tree `m`, then fresh leaf outputs."""
    ens = state.ensemble
    cfg = ens.config
    tree = ens.trees[m]
    leaf_of = state.leaf_of[m]
    r = partial_residuals(state, m)
    sigma2, tau = ens.sigma2, cfg.leaf_sd

    if rng.random() < 0.5:
        record = MoveRecord("grow", False)
        leaves = tree.leaf_ids()
        nx = leaves[rng.integers(len(leaves))]
        node = tree.nodes[nx]
        rule = propose_rule(tree, nx, ens.theta, cfg, rng)
        idx = np.flatnonzero(leaf_of == nx)
        go_left = rule.goes_left(state.x_cont[idx], state.x_cat[idx])
        r_nx = r[idx]
        n_left = int(go_left.sum())
        parent = suffstats(idx.size, r_nx.sum(), sigma2, tau)
        left = suffstats(n_left, r_nx[go_left].sum(), sigma2, tau)
        right = suffstats(idx.size - n_left, r_nx[~go_left].sum(), sigma2, tau)
        log_r = log_grow_ratio(
            parent, left, right, node.depth, len(leaves), tree.nnog_after_grow(nx),
            cfg.alpha, cfg.beta, tau,
        )
        if math.log(1.0 - rng.random()) < log_r:
            left_id, right_id = tree.grow(nx, rule)
            leaf_of[idx[go_left]] = left_id
            leaf_of[idx[~go_left]] = right_id
            record.accepted = True
    else:
        record = MoveRecord("prune", False)
        nogs = tree.nog_ids()
        if nogs:
            nx = nogs[rng.integers(len(nogs))]
            node = tree.nodes[nx]
            idx_l = np.flatnonzero(leaf_of == node.left)
            idx_r = np.flatnonzero(leaf_of == node.right)
            sum_l, sum_r = r[idx_l].sum(), r[idx_r].sum()
            left = suffstats(idx_l.size, sum_l, sigma2, tau)
            right = suffstats(idx_r.size, sum_r, sigma2, tau)
            parent = suffstats(idx_l.size + idx_r.size, sum_l + sum_r, sigma2, tau)
            log_r = log_prune_ratio(
                parent, left, right, node.depth, len(nogs), tree.nleaf - 1,
                cfg.alpha, cfg.beta, tau,
            )
            if math.log(1.0 - rng.random()) < log_r:
                tree.prune(nx)
                leaf_of[idx_l] = nx
                leaf_of[idx_r] = nx
                record.accepted = True

    table = draw_leaf_outputs(tree, leaf_of, r, sigma2, tau, rng)
    new_fit = table[leaf_of]
    state.total += new_fit - state.fits[m]
    state.fits[m] = new_fit
    return record


def update_sigma2(state: FitState, rng: np.random.Generator) -> float:
    """Draw sigma^2 from its inverse-gamma full conditional."""
    cfg = state.config
    resid = state.target - state.total
    shape = 0.5 * (cfg.nu + state.n)
    scale = 0.5 * (cfg.nu * cfg.lam + float(resid @ resid))
    return scale / rng.gamma(shape)


def update_theta(ensemble: Ensemble, rng: np.random.Generator) -> float:
    nonzero, zero, _, _ = rule_census(ensemble)
    cfg = ensemble.config
    return float(rng.beta(cfg.a_theta + nonzero, cfg.b_theta + zero))


def update_latents(state: FitState, rng: np.random.Generator) -> np.ndarray:
    return probit_latents(state.total, state.y, rng)


def gibbs_iteration(state: FitState, rng: np.random.Generator | None = None) -> FitState:
    """One full sweep; appends a diagnostics row."""
    rng = rng if rng is not None else state.rng
    ens = state.ensemble
    diag = state.diagnostics
    if state.task is Task.CLASSIFICATION:
        state.target = update_latents(state, rng)

    grow = [0, 0]
    prune = [0, 0]
    for m in range(ens.config.M):
        rec = update_tree(state, m, rng)
        counter = grow if rec.move == "grow" else prune
        counter[0] += 1
        counter[1] += rec.accepted
    # re-sum to keep incremental round-off from accumulating
    state.total = state.fits.sum(axis=0)

    if state.task is Task.REGRESSION:
        ens.sigma2 = update_sigma2(state, rng)
    if ens.config.mode is Mode.OBLIQUE:
        ens.theta = update_theta(ens, rng)

    state.iteration += 1
    diag.grow_proposed += grow[0]
    diag.grow_accepted += grow[1]
    diag.prune_proposed += prune[0]
    diag.prune_accepted += prune[1]
    _, _, n_rules, n_axis = rule_census(ens)
    depths = [t.height for t in ens.trees]
    diag.rows.append(
        (
            state.iteration,
            float(ens.sigma2),
            float(ens.theta),
            float(np.mean(depths)),
            sum(t.nleaf for t in ens.trees),
            grow[1] / grow[0] if grow[0] else 0.0,
            prune[1] / prune[0] if prune[0] else 0.0,
            n_axis / n_rules if n_rules else 0.0,
        )
    )
    return state


def check_fits(state: FitState, rows: np.ndarray | None = None, atol: float = 1e-10) -> bool:
    """Compare cached per-tree fits with fresh tree evaluation."""
    if rows is None:
        rows = np.arange(state.n)
    xc, xk = state.x_cont[rows], state.x_cat[rows]
    for m, tree in enumerate(state.ensemble.trees):
        if not np.allclose(tree.predict(xc, xk), state.fits[m, rows], rtol=0, atol=atol):
            return False
        if not np.array_equal(tree.apply(xc, xk), state.leaf_of[m, rows]):
            return False
    return np.allclose(state.fits[:, rows].sum(axis=0), state.total[rows], rtol=0, atol=atol)
