"""Decision trees with oblique and categorical-subset rules, and tree ensembles.

A tree is a dict of `Node` objects keyed by integer ids. Ids are assigned at
creation and never reused within a tree, so samplers can keep per-observation
leaf assignments across structural edits.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence, Union

import numpy as np


class StructureError(ValueError):
    """Raised on an invalid structural edit (e.g. growing a decision node)."""


class InputError(ValueError):
    """Raised when a predictor vector does not match the tree's schema."""


class Mode(enum.Enum):
    OBLIQUE = "oblique"
    AXIS_ALIGNED = "axis"


@dataclass(frozen=True, eq=False)
class ContinuousRule:
    """Decision ``phi @ x_cont < cutpoint``.

    `phi` is either all-zero (then the cutpoint is 1 and every point goes
    left) or has unit Euclidean norm.
    """

    phi: np.ndarray
    cutpoint: float

    def __post_init__(self):
        phi = np.array(self.phi, dtype=float)
        phi.setflags(write=False)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "cutpoint", float(self.cutpoint))

    @property
    def is_zero(self) -> bool:
        return not self.phi.any()

    @property
    def nonzero_count(self) -> int:
        return int(np.count_nonzero(self.phi))

    def goes_left(self, x_cont: np.ndarray, x_cat: np.ndarray | None = None) -> np.ndarray:
        return x_cont @ self.phi < self.cutpoint

    def __eq__(self, other):
        if not isinstance(other, ContinuousRule):
            return NotImplemented
        return self.cutpoint == other.cutpoint and np.array_equal(self.phi, other.phi)

    __hash__ = None


@dataclass(frozen=True, eq=True)
class CategoricalRule:
    """Decision ``x_cat[index] in levels``; level codes are 0-based."""

    index: int
    levels: frozenset
    _codes: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        levels = frozenset(int(v) for v in self.levels)
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "_codes", np.array(sorted(levels), dtype=np.int64))

    def goes_left(self, x_cont: np.ndarray | None, x_cat: np.ndarray) -> np.ndarray:
        return np.isin(x_cat[:, self.index], self._codes)


Rule = Union[ContinuousRule, CategoricalRule]


@dataclass
class Node:
    id: int
    depth: int
    parent: int | None = None
    rule: Rule | None = None
    left: int | None = None
    right: int | None = None
    # NaN marks an unset leaf output.
    mu: float = math.nan

    @property
    def is_leaf(self) -> bool:
        return self.rule is None


class DecisionTree:
    """Binary decision tree with scalar leaf outputs.

    Examples
    --------
    >>> t = DecisionTree(mu=0.0)
    >>> t.nleaf, t.nnog
    (1, 0)
    """

    def __init__(self, mu: float = math.nan):
        self.nodes: dict[int, Node] = {0: Node(0, 0, mu=float(mu))}
        self.root = 0
        self.next_id = 1

    # -- queries ---------------------------------------------------------

    def __getitem__(self, node_id: int) -> Node:
        return self.nodes[node_id]

    def __contains__(self, node_id: int) -> bool:
        return node_id in self.nodes

    def leaf_ids(self) -> list[int]:
        return [k for k, v in self.nodes.items() if v.rule is None]

    def nog_ids(self) -> list[int]:
        nodes = self.nodes
        return [
            k
            for k, v in nodes.items()
            if v.rule is not None and nodes[v.left].rule is None and nodes[v.right].rule is None
        ]

    def decision_ids(self) -> list[int]:
        return [k for k, v in self.nodes.items() if v.rule is not None]

    @property
    def nleaf(self) -> int:
        return sum(1 for v in self.nodes.values() if v.rule is None)

    @property
    def nnog(self) -> int:
        return len(self.nog_ids())

    @property
    def height(self) -> int:
        """Depth of the deepest leaf (0 for a root-only tree)."""
        return max(v.depth for v in self.nodes.values())

    def is_nog(self, node_id: int) -> bool:
        v = self.nodes[node_id]
        return v.rule is not None and self.nodes[v.left].is_leaf and self.nodes[v.right].is_leaf

    def nnog_after_grow(self, leaf_id: int) -> int:
        """nnog of the tree obtained by growing `leaf_id`, without editing."""
        parent = self.nodes[leaf_id].parent
        lost = 1 if parent is not None and self.is_nog(parent) else 0
        return self.nnog + 1 - lost

    def rules(self) -> Iterator[Rule]:
        for v in self.nodes.values():
            if v.rule is not None:
                yield v.rule

    def ancestors(self, node_id: int) -> list[tuple[Node, bool]]:
        """Ancestors of `node_id` from the root down, each paired with
        whether the path to `node_id` takes its left branch."""
        path = []
        child = self.nodes[node_id]
        while child.parent is not None:
            parent = self.nodes[child.parent]
            path.append((parent, parent.left == child.id))
            child = parent
        path.reverse()
        return path

    def preorder(self) -> Iterator[Node]:
        stack = [self.root]
        while stack:
            v = self.nodes[stack.pop()]
            yield v
            if v.rule is not None:
                stack.append(v.right)
                stack.append(v.left)

    # -- edits -----------------------------------------------------------

    def grow(self, leaf_id: int, rule: Rule) -> tuple[int, int]:
        """Turn leaf `leaf_id` into a decision node; returns the new child ids."""
        node = self.nodes.get(leaf_id)
        if node is None or not node.is_leaf:
            raise StructureError(f"node {leaf_id} is not a leaf")
        left = Node(self.next_id, node.depth + 1, parent=leaf_id)
        right = Node(self.next_id + 1, node.depth + 1, parent=leaf_id)
        self.next_id += 2
        self.nodes[left.id] = left
        self.nodes[right.id] = right
        node.rule, node.left, node.right, node.mu = rule, left.id, right.id, math.nan
        return left.id, right.id

    def prune(self, node_id: int) -> None:
        """Collapse nog node `node_id` into a leaf with unset output."""
        node = self.nodes.get(node_id)
        if node is None or node.is_leaf or not self.is_nog(node_id):
            raise StructureError(f"node {node_id} is not a nog node")
        del self.nodes[node.left]
        del self.nodes[node.right]
        node.rule, node.left, node.right, node.mu = None, None, None, math.nan

    def copy(self) -> DecisionTree:
        new = DecisionTree.__new__(DecisionTree)
        new.nodes = {
            k: Node(v.id, v.depth, v.parent, v.rule, v.left, v.right, v.mu)
            for k, v in self.nodes.items()
        }
        new.root = self.root
        new.next_id = self.next_id
        return new

    def same_topology(self, other: DecisionTree) -> bool:
        """Structural equality: same shape and rules, ignoring ids and outputs."""
        a, b = list(self.preorder()), list(other.preorder())
        return len(a) == len(b) and all(
            x.depth == y.depth and x.rule == y.rule for x, y in zip(a, b)
        )

    # -- evaluation ------------------------------------------------------

    def apply(self, x_cont: np.ndarray, x_cat: np.ndarray | None = None) -> np.ndarray:
        """Leaf id reached by each row of a predictor matrix."""
        x_cont = np.asarray(x_cont, dtype=float)
        n = x_cont.shape[0]
        if x_cat is None:
            x_cat = np.zeros((n, 0), dtype=np.int64)
        out = np.empty(n, dtype=np.int64)
        stack = [(self.root, np.arange(n))]
        while stack:
            node_id, idx = stack.pop()
            node = self.nodes[node_id]
            if node.rule is None:
                out[idx] = node_id
                continue
            left = node.rule.goes_left(x_cont[idx], x_cat[idx])
            stack.append((node.left, idx[left]))
            stack.append((node.right, idx[~left]))
        return out

    def predict(self, x_cont: np.ndarray, x_cat: np.ndarray | None = None) -> np.ndarray:
        leaves = self.apply(x_cont, x_cat)
        ids = np.fromiter(self.nodes.keys(), dtype=np.int64)
        table = np.full(self.next_id, math.nan)
        table[ids] = [v.mu for v in self.nodes.values()]
        out = table[leaves]
        if np.isnan(out).any():
            raise StructureError("prediction reached a leaf whose output is unset")
        return out


def _check_levels(x_cat: np.ndarray, n_levels: Sequence[int] | None) -> None:
    if n_levels is None:
        return
    if len(x_cat) != len(n_levels):
        raise InputError(f"expected {len(n_levels)} categorical codes, got {len(x_cat)}")
    for j, (code, k) in enumerate(zip(x_cat, n_levels)):
        if not 0 <= code < k:
            raise InputError(f"level code {code} for categorical predictor {j} not in 0..{k - 1}")


def traverse(
    tree: DecisionTree,
    x_cont: Sequence[float],
    x_cat: Sequence[int] = (),
    n_levels: Sequence[int] | None = None,
) -> int:
    """Follow decisions from the root and return the id of the leaf reached."""
    x_cont = np.asarray(x_cont, dtype=float)
    x_cat = np.asarray(x_cat, dtype=np.int64)
    _check_levels(x_cat, n_levels)
    node = tree.nodes[tree.root]
    while node.rule is not None:
        rule = node.rule
        if isinstance(rule, ContinuousRule):
            left = float(x_cont @ rule.phi) < rule.cutpoint
        else:
            left = int(x_cat[rule.index]) in rule.levels
        node = tree.nodes[node.left if left else node.right]
    return node.id


def evaluate(
    tree: DecisionTree,
    x_cont: Sequence[float],
    x_cat: Sequence[int] = (),
    n_levels: Sequence[int] | None = None,
) -> float:
    mu = tree.nodes[traverse(tree, x_cont, x_cat, n_levels)].mu
    if math.isnan(mu):
        raise StructureError("leaf output is unset")
    return mu


def grow_edit(tree: DecisionTree, leaf_id: int, rule: Rule) -> DecisionTree:
    """Copy of `tree` with `leaf_id` split by `rule`."""
    new = tree.copy()
    new.grow(leaf_id, rule)
    return new


def prune_edit(tree: DecisionTree, node_id: int) -> DecisionTree:
    """Copy of `tree` with nog node `node_id` collapsed to a leaf."""
    new = tree.copy()
    new.prune(node_id)
    return new


@dataclass(frozen=True)
class EnsembleConfig:
    """Hyperparameters and predictor layout shared by every tree.

    `tau` is the marginal prior sd of f(x); each leaf output has prior sd
    ``tau / sqrt(M)`` (see `leaf_sd`).
    """

    M: int = 200
    alpha: float = 0.95
    beta: float = 2.0
    tau: float = 0.5
    nu: float = 3.0
    lam: float = 1.0
    a_theta: float = 1.0
    b_theta: float = 1.0
    p_cont: int = 1
    n_levels: tuple[int, ...] = ()
    mode: Mode = Mode.OBLIQUE
    prob_categorical: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "n_levels", tuple(int(k) for k in self.n_levels))
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.M < 1:
            raise ValueError("M must be positive")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.beta < 0:
            raise ValueError("beta must be non-negative")
        for name in ("tau", "nu", "lam", "a_theta", "b_theta"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.p_cont < 0 or self.p_cont + self.p_cat < 1:
            raise ValueError("need at least one predictor")
        if any(k < 1 for k in self.n_levels):
            raise ValueError("every categorical predictor needs at least one level")
        if self.prob_categorical is not None and not 0 <= self.prob_categorical <= 1:
            raise ValueError("prob_categorical must lie in [0, 1]")

    @property
    def p_cat(self) -> int:
        return len(self.n_levels)

    @property
    def leaf_sd(self) -> float:
        return self.tau / math.sqrt(self.M)


@dataclass
class Ensemble:
    trees: list[DecisionTree]
    sigma2: float
    theta: float
    config: EnsembleConfig

    def __post_init__(self):
        if len(self.trees) != self.config.M:
            raise ValueError(f"expected {self.config.M} trees, got {len(self.trees)}")

    @classmethod
    def initial(cls, config: EnsembleConfig, sigma2: float = 1.0) -> Ensemble:
        theta = config.a_theta / (config.a_theta + config.b_theta)
        return cls([DecisionTree(mu=0.0) for _ in range(config.M)], sigma2, theta, config)

    def copy(self) -> Ensemble:
        return Ensemble([t.copy() for t in self.trees], self.sigma2, self.theta, self.config)

    def predict(self, x_cont: np.ndarray, x_cat: np.ndarray | None = None) -> np.ndarray:
        x_cont = np.asarray(x_cont, dtype=float)
        out = np.zeros(x_cont.shape[0])
        for t in self.trees:
            out += t.predict(x_cont, x_cat)
        return out


def ensemble_predict(
    ensemble: Ensemble,
    x_cont: Sequence[float],
    x_cat: Sequence[int] = (),
) -> float:
    """Sum of tree outputs at a single point, on the standardized scale."""
    n_levels = ensemble.config.n_levels
    return math.fsum(evaluate(t, x_cont, x_cat, n_levels) for t in ensemble.trees)
