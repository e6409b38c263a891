"""Dense two-phase primal simplex for small box-bounded linear programs.

Problems have the form ``max/min c @ x`` subject to ``G @ x <= h`` and
``-1 <= x <= 1``. They are shifted to ``y = x + 1 >= 0`` with the upper box
bounds as explicit rows, then solved on a dense tableau using Bland's rule.
Sizes are tiny (a handful of rows), so robustness matters more than speed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FEAS_TOL = 1e-9
PIVOT_TOL = 1e-11


class SolverError(RuntimeError):
    """Raised when the simplex exceeds its iteration cap or goes unbounded."""


@dataclass
class LPResult:
    feasible: bool
    value: float = float("nan")
    point: np.ndarray | None = None


class _Tableau:
    """Feasible basis for ``A y <= b, y >= 0`` found by phase one.

    Columns: p structural, m slack; the last column is the right-hand side.
    Row ``m`` (the last) holds reduced costs for phase two.
    """

    def __init__(self, T: np.ndarray, basis: np.ndarray, p: int):
        self.T = T
        self.basis = basis
        self.p = p

    def copy(self) -> _Tableau:
        return _Tableau(self.T.copy(), self.basis.copy(), self.p)


def _pivot(T: np.ndarray, basis: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    factor = T[:, col].copy()
    factor[row] = 0.0
    T -= np.outer(factor, T[row])
    T[:, col] = 0.0
    T[row, col] = 1.0
    basis[row] = col


def _run(T: np.ndarray, basis: np.ndarray, ncols: int, max_iter: int) -> None:
    """Maximize; the objective row is the last row of `T` (holding -c)."""
    m = T.shape[0] - 1
    for _ in range(max_iter):
        cost = T[m, :ncols]
        candidates = np.flatnonzero(cost < -PIVOT_TOL)
        if candidates.size == 0:
            return
        col = candidates[0]
        column = T[:m, col]
        rows = np.flatnonzero(column > PIVOT_TOL)
        if rows.size == 0:
            raise SolverError("linear program is unbounded")
        ratios = T[rows, -1] / column[rows]
        best = ratios.min()
        ties = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
        row = ties[np.argmin(basis[ties])]
        _pivot(T, basis, row, col)
    raise SolverError(f"simplex did not converge in {max_iter} pivots (tableau {T.shape})")


def _phase_one(A: np.ndarray, b: np.ndarray) -> _Tableau | None:
    m, p = A.shape
    neg = b < 0
    n_art = int(neg.sum())
    ncols = p + m + n_art
    T = np.zeros((m + 1, ncols + 1))
    T[:m, :p] = A
    T[:m, p : p + m] = np.eye(m)
    T[:m, -1] = b
    art_rows = np.flatnonzero(neg)
    T[art_rows, : p + m] *= -1.0
    T[art_rows, -1] *= -1.0
    basis = p + np.arange(m)
    for k, i in enumerate(art_rows):
        T[i, p + m + k] = 1.0
        basis[i] = p + m + k
    max_iter = 50 * (ncols + m + 1)
    if n_art:
        # maximize -sum(artificials); cost row starts as +1 on artificials
        T[m, p + m : ncols] = 1.0
        T[m] -= T[art_rows].sum(axis=0)
        _run(T, basis, ncols, max_iter)
        if T[m, -1] < -FEAS_TOL:
            return None
        # drive zero-level artificials out of the basis
        keep = np.ones(m + 1, dtype=bool)
        for i in range(m):
            if basis[i] >= p + m:
                cols = np.flatnonzero(np.abs(T[i, : p + m]) > PIVOT_TOL)
                if cols.size:
                    _pivot(T, basis, i, cols[0])
                else:
                    keep[i] = False
        T = np.delete(T[keep], np.s_[p + m : ncols], axis=1)
        basis = basis[keep[:m]]
    T[-1] = 0.0
    return _Tableau(T, basis, p)


def _phase_two(tab: _Tableau, c: np.ndarray) -> tuple[float, np.ndarray]:
    T, basis, p = tab.T, tab.basis, tab.p
    m = T.shape[0] - 1
    ncols = T.shape[1] - 1
    T[m] = 0.0
    T[m, :p] = -c
    for i in range(m):
        coef = T[m, basis[i]]
        if coef != 0.0:
            T[m] -= coef * T[i]
    _run(T, basis, ncols, 50 * (ncols + m + 1))
    y = np.zeros(ncols)
    y[basis] = T[:m, -1]
    return float(T[m, -1]), y[:p]


def _standard_form(G: np.ndarray, h: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    G = np.asarray(G, dtype=float).reshape(-1, p)
    h = np.asarray(h, dtype=float).reshape(-1)
    A = np.vstack([G, np.eye(p)])
    b = np.concatenate([h + G.sum(axis=1), np.full(p, 2.0)])
    return A, b


def _to_x(y: np.ndarray) -> np.ndarray:
    x = y - 1.0
    # clamp tolerance-level excursions onto the box
    return np.clip(x, -1.0, 1.0)


def feasible_tableau(G: np.ndarray, h: np.ndarray, p: int) -> _Tableau | None:
    """Phase-one basis for ``{G x <= h} ∩ [-1, 1]^p``; None if empty."""
    A, b = _standard_form(G, h, p)
    return _phase_one(A, b)


def maximize(tab: _Tableau, c: np.ndarray) -> tuple[float, np.ndarray]:
    """Maximize ``c @ x`` from a phase-one basis; returns (value, point)."""
    c = np.asarray(c, dtype=float)
    work = tab.copy()
    value_y, y = _phase_two(work, c)
    return value_y - c.sum(), _to_x(y)


def solve(
    G: np.ndarray, h: np.ndarray, c: np.ndarray, sense: str = "max"
) -> LPResult:
    """Optimize ``c @ x`` over ``{G x <= h} ∩ [-1, 1]^p``.

    Parameters
    ----------
    G, h
        Inequality system, one row per constraint.
    c
        Objective coefficients; must be finite.
    sense
        ``"max"`` or ``"min"``.
    """
    c = np.asarray(c, dtype=float)
    if not np.all(np.isfinite(c)):
        raise ValueError("objective must be finite")
    if sense not in ("max", "min"):
        raise ValueError(f"unknown sense {sense!r}")
    tab = feasible_tableau(G, h, c.size)
    if tab is None:
        return LPResult(False)
    sign = 1.0 if sense == "max" else -1.0
    value, x = maximize(tab, sign * c)
    return LPResult(True, sign * value, x)
