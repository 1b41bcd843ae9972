"""Dense two-phase tableau simplex with Bland's anti-cycling rule.

Solves  min c.x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  x >= 0.
Meant for the small, dense LPs that arise here; no presolve, no scaling.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration_limit"


@dataclass
class SimplexResult:
    status: str
    x: np.ndarray | None
    fun: float | None
    iterations: int


class _Tableau:
    def __init__(self, T: np.ndarray, basis: list, tol: float):
        self.T = T
        self.basis = basis
        self.tol = tol
        self.iterations = 0

    def pivot(self, row: int, col: int) -> None:
        T = self.T
        T[row] /= T[row, col]
        col_vals = T[:, col].copy()
        col_vals[row] = 0.0
        nz = np.abs(col_vals) > 0
        T[nz] -= np.outer(col_vals[nz], T[row])
        self.basis[row] = col
        self.iterations += 1

    def run(self, cost_row: int, n_cols: int, max_iter: int) -> str:
        """Minimize the objective kept in ``T[cost_row]`` (reduced costs, RHS = -objective)."""
        T, tol = self.T, self.tol
        m = cost_row
        while True:
            if self.iterations >= max_iter:
                return ITERATION_LIMIT
            reduced = T[cost_row, :n_cols]
            candidates = np.flatnonzero(reduced < -tol)
            if candidates.size == 0:
                return OPTIMAL
            col = int(candidates[0])
            column = T[:m, col]
            rows = np.flatnonzero(column > tol)
            if rows.size == 0:
                return UNBOUNDED
            ratios = T[rows, -1] / column[rows]
            best = ratios.min()
            tied = rows[ratios <= best + tol * max(1.0, abs(best))]
            # Bland: among tied rows, leave with the smallest basic variable index
            row = int(min(tied, key=lambda r: self.basis[r]))
            self.pivot(row, col)


def linprog_simplex(
    c,
    A_ub=None,
    b_ub=None,
    A_eq=None,
    b_eq=None,
    max_iter: int = 50_000,
    tol: float = 1e-9,
) -> SimplexResult:
    c = np.asarray(c, dtype=float)
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.asarray(A_ub, dtype=float).reshape(-1, n)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).reshape(-1)
    A_eq = np.zeros((0, n)) if A_eq is None else np.asarray(A_eq, dtype=float).reshape(-1, n)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).reshape(-1)
    m_ub, m_eq = A_ub.shape[0], A_eq.shape[0]
    m = m_ub + m_eq

    # columns: original | slacks (one per <= row) | artificials (as needed) | rhs
    A = np.zeros((m, n + m_ub))
    A[:m_ub, :n] = A_ub
    A[:m_ub, n:] = np.eye(m_ub)
    A[m_ub:, :n] = A_eq
    b = np.concatenate([b_ub, b_eq])
    flip = b < 0
    A[flip] *= -1
    b[flip] *= -1

    basis = [-1] * m
    for i in range(m_ub):
        if not flip[i]:
            basis[i] = n + i
    need_art = [i for i in range(m) if basis[i] < 0]
    n_struct = n + m_ub
    n_art = len(need_art)

    T = np.zeros((m + 1, n_struct + n_art + 1))
    T[:m, :n_struct] = A
    T[:m, -1] = b
    for k, i in enumerate(need_art):
        T[i, n_struct + k] = 1.0
        basis[i] = n_struct + k
    tab = _Tableau(T, basis, tol)

    if n_art:
        # phase 1: minimize the sum of artificials
        T[m, n_struct : n_struct + n_art] = 1.0
        for i in need_art:
            T[m] -= T[i]
        status = tab.run(m, n_struct + n_art, max_iter)
        if status == ITERATION_LIMIT:
            return SimplexResult(status, None, None, tab.iterations)
        scale = max(1.0, float(np.abs(b).max(initial=0.0)))
        if -T[m, -1] > tol * scale * 10:
            return SimplexResult(INFEASIBLE, None, None, tab.iterations)
        # drive artificials out of the basis; rows where that is impossible are redundant
        redundant = []
        for i in range(m):
            if tab.basis[i] >= n_struct:
                cols = np.flatnonzero(np.abs(T[i, :n_struct]) > tol)
                if cols.size:
                    tab.pivot(i, int(cols[0]))
                else:
                    redundant.append(i)
        keep = [i for i in range(m) if i not in redundant]
        T = np.vstack([T[keep, :n_struct], np.zeros((1, n_struct))])
        T = np.hstack([T, np.concatenate([tab.T[keep, -1], [0.0]])[:, None]])
        iters_phase1 = tab.iterations
        tab = _Tableau(T, [tab.basis[i] for i in keep], tol)
        m = len(keep)
    else:
        iters_phase1 = 0
        tab.T = T[:, list(range(n_struct)) + [T.shape[1] - 1]]

    T = tab.T
    T[m, :] = 0.0
    T[m, :n] = c
    for i, j in enumerate(tab.basis):
        if T[m, j] != 0.0:
            T[m] -= T[m, j] * T[i]
    status = tab.run(m, n_struct, max_iter)
    total_iters = iters_phase1 + tab.iterations
    if status != OPTIMAL:
        return SimplexResult(status, None, None, total_iters)
    x = np.zeros(n_struct)
    for i, j in enumerate(tab.basis):
        x[j] = T[i, -1]
    x = x[:n]
    return SimplexResult(OPTIMAL, x, float(c @ x), total_iters)
