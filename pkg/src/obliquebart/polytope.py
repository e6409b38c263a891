"""Leaf polytopes and the valid ranges of new decision rules at a node."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import simplex
from .simplex import LPResult
from .tree import CategoricalRule, ContinuousRule, DecisionTree


@dataclass(frozen=True, eq=False)
class Halfspace:
    a: np.ndarray
    b: float
    sense: str  # "<" (left branch) or ">=" (right branch)

    def as_leq(self) -> tuple[np.ndarray, float]:
        """Closed ``row @ x <= rhs`` form; strictness is dropped."""
        if self.sense in ("<", "<="):
            return self.a, self.b
        return -self.a, -self.b


@dataclass
class LeafPolytope:
    """``[-1, 1]^dim`` intersected with the ancestor halfspaces of a node."""

    dim: int
    halfspaces: list[Halfspace] = field(default_factory=list)

    def inequalities(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.halfspaces:
            return np.zeros((0, self.dim)), np.zeros(0)
        rows, rhs = zip(*(hs.as_leq() for hs in self.halfspaces))
        return np.array(rows, dtype=float), np.array(rhs, dtype=float)

    def with_halfspace(self, hs: Halfspace) -> LeafPolytope:
        return LeafPolytope(self.dim, [*self.halfspaces, hs])

    def contains(self, x: np.ndarray, tol: float = simplex.FEAS_TOL) -> bool:
        x = np.asarray(x, dtype=float)
        if np.any(np.abs(x) > 1 + tol):
            return False
        G, h = self.inequalities()
        return bool(np.all(G @ x <= h + tol))


def leaf_polytope(tree: DecisionTree, node_id: int, p_cont: int) -> LeafPolytope:
    """Box plus one halfspace per continuous ancestor rule of `node_id`."""
    halfspaces = []
    for anc, went_left in tree.ancestors(node_id):
        if isinstance(anc.rule, ContinuousRule):
            halfspaces.append(
                Halfspace(anc.rule.phi, anc.rule.cutpoint, "<" if went_left else ">=")
            )
    return LeafPolytope(p_cont, halfspaces)


def lp_solve(poly: LeafPolytope, objective: np.ndarray, direction: str = "max") -> LPResult:
    """Optimize a linear objective over a leaf polytope.

    Returns an `LPResult` with ``feasible=False`` for an empty polytope;
    raises `simplex.SolverError` if the simplex stalls.
    """
    G, h = poly.inequalities()
    return simplex.solve(G, h, objective, direction)


def phi_range(poly: LeafPolytope, phi: np.ndarray) -> tuple[float, float] | None:
    """Minimum and maximum of ``phi @ x`` over `poly`, or None when empty."""
    phi = np.asarray(phi, dtype=float)
    if not phi.any():
        raise ValueError("phi must have a nonzero entry")
    if not poly.halfspaces:
        span = float(np.abs(phi).sum())
        return -span, span
    G, h = poly.inequalities()
    tab = simplex.feasible_tableau(G, h, poly.dim)
    if tab is None:
        return None
    hi, _ = simplex.maximize(tab, phi)
    neg_lo, _ = simplex.maximize(tab, -phi)
    lo = -neg_lo
    span = float(np.abs(phi).sum())
    lo, hi = max(lo, -span), min(hi, span)
    if lo > hi:
        lo = hi = 0.5 * (lo + hi)
    return lo, hi


def available_levels(
    tree: DecisionTree, node_id: int, index: int, n_levels: int
) -> frozenset:
    """Levels of categorical predictor `index` that can reach `node_id`."""
    levels = frozenset(range(n_levels))
    for anc, went_left in tree.ancestors(node_id):
        rule = anc.rule
        if isinstance(rule, CategoricalRule) and rule.index == index:
            levels = levels & rule.levels if went_left else levels - rule.levels
    return levels
