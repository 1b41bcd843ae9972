"""Minimal measurement dependence for a target correlation table.

Finds a deterministic hidden-variable model that reproduces the target
exactly while minimizing M, the largest L1 distance between two of its
setting-conditioned distributions. Two strategy classes are supported:

``lambda_only``
    each hidden value fixes a constant answer pair (x, y);
``setting_dependent``
    each hidden value fixes answer functions f: S -> X and g: T -> Y.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix

from .errors import SizeGuardError
from .game import CorrelationTable
from .mdl import MdlModel, table
from .metrics import free_will_F, variational_M
from .simplex import INFEASIBLE, ITERATION_LIMIT, OPTIMAL, linprog_simplex

log = logging.getLogger(__name__)

LAMBDA_ONLY = "lambda_only"
SETTING_DEPENDENT = "setting_dependent"
MODES = (LAMBDA_ONLY, SETTING_DEPENDENT)

STRATEGY_GUARD = 10**6
DENSE_TABLEAU_LIMIT = 4_000_000
GROUP_TOL = 1e-12
CERTIFY_TOL = 1e-9


@dataclass(frozen=True)
class StrategySet:
    """Deterministic strategies as outcome-index tuples ``(f, g)``.

    ``f[s]`` is Alice's answer index for setting index ``s``; likewise ``g``.
    """

    strategies: tuple
    mode: str

    def __len__(self) -> int:
        return len(self.strategies)

    def __iter__(self):
        return iter(self.strategies)


def enumerate_strategies(n_s: int, n_t: int, n_x: int, n_y: int, mode: str = LAMBDA_ONLY) -> StrategySet:
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    if mode == LAMBDA_ONLY:
        strategies = tuple(((x,) * n_s, (y,) * n_t) for x in range(n_x) for y in range(n_y))
        return StrategySet(strategies, mode)
    count = n_x**n_s * n_y**n_t
    if count > STRATEGY_GUARD:
        raise SizeGuardError(
            f"{count} setting-dependent strategies exceed the guard of {STRATEGY_GUARD}"
        )
    fs = list(itertools.product(range(n_x), repeat=n_s))
    gs = list(itertools.product(range(n_y), repeat=n_t))
    return StrategySet(tuple(itertools.product(fs, gs)), mode)


@dataclass(frozen=True)
class LpSolution:
    status: str
    M_star: float | None
    model: MdlModel | None
    mode: str
    backend: str = "simplex"
    iterations: int = 0

    @property
    def F(self) -> float | None:
        return None if self.M_star is None else free_will_F(min(max(self.M_star, 0.0), 2.0))


def _setting_groups(target: CorrelationTable) -> list:
    """Setting-pair indices grouped by identical outcome distributions."""
    rows = target.setting_rows().astype(float).reshape(-1, len(target.x_labels) * len(target.y_labels))
    groups: list = []
    reps: list = []
    for k, row in enumerate(rows):
        for g, rep in zip(groups, reps):
            if np.max(np.abs(rows[rep] - row)) <= GROUP_TOL:
                g.append(k)
                break
        else:
            groups.append([k])
            reps.append(k)
    return groups


def _build_lp(target: CorrelationTable, strategies: StrategySet):
    """Constraint matrices for min M over p(lambda|s,t), d+, d-, M (all >= 0)."""
    n_x, n_y, n_s, n_t = target.values.shape
    n_set = n_s * n_t
    n_l = len(strategies)
    F = np.array([f for f, _ in strategies], dtype=int)  # (n_l, n_s)
    G = np.array([g for _, g in strategies], dtype=int)  # (n_l, n_t)
    tv = target.as_float()

    if strategies.mode == LAMBDA_ONLY:
        # each answer pair comes from exactly one strategy, so p(.|s,t) is pinned
        # down by the target: equal rows give equal p, and comparing one
        # representative per group of equal rows is enough
        reps = [g[0] for g in _setting_groups(target)]
    else:
        reps = list(range(n_set))
    pairs = list(itertools.combinations(reps, 2))
    n_pairs = len(pairs)

    n_p = n_set * n_l
    n_d = n_pairs * n_l
    n_var = n_p + 2 * n_d + 1
    m_col = n_var - 1

    def p_idx(k, l):
        return k * n_l + l

    rows, cols, eq_b = [], [], []
    r = 0
    lam = np.arange(n_l)
    for k in range(n_set):
        si, ti = divmod(k, n_t)
        rows.append(np.full(n_l, r))
        cols.append(p_idx(k, lam))
        eq_b.append(1.0)
        r += 1
        for xi in range(n_x):
            for yi in range(n_y):
                hits = np.flatnonzero((F[:, si] == xi) & (G[:, ti] == yi))
                rows.append(np.full(hits.size, r))
                cols.append(p_idx(k, hits))
                eq_b.append(tv[xi, yi, si, ti])
                r += 1
    # p(l|a) - p(l|b) - d+ + d- = 0 for every compared pair (a, b) and strategy l
    if n_pairs:
        a = np.repeat([pa for pa, _ in pairs], n_l)
        b = np.repeat([pb for _, pb in pairs], n_l)
        ll = np.tile(lam, n_pairs)
        q = np.arange(n_d)
        r_pair = r + q
        rows += [r_pair] * 4
        cols += [p_idx(a, ll), p_idx(b, ll), n_p + q, n_p + n_d + q]
        vals_pair = [np.ones(n_d), -np.ones(n_d), -np.ones(n_d), np.ones(n_d)]
        eq_b += [0.0] * n_d
        r += n_d
    rows_i = np.concatenate(rows)
    cols_i = np.concatenate(cols)
    n_unit = rows_i.size - (4 * n_d if n_pairs else 0)
    vals_i = np.concatenate([np.ones(n_unit)] + (vals_pair if n_pairs else []))
    A_eq = coo_matrix((vals_i, (rows_i, cols_i)), shape=(r, n_var)).tocsr()

    # sum_l (d+ + d-) - M <= 0 for every compared pair
    if n_pairs:
        q = np.repeat(np.arange(n_pairs), n_l)
        j = np.arange(n_d)
        ub_rows = np.concatenate([q, q, np.arange(n_pairs)])
        ub_cols = np.concatenate([n_p + j, n_p + n_d + j, np.full(n_pairs, m_col)])
        ub_vals = np.concatenate([np.ones(2 * n_d), -np.ones(n_pairs)])
        A_ub = coo_matrix((ub_vals, (ub_rows, ub_cols)), shape=(n_pairs, n_var)).tocsr()
    else:
        A_ub = csr_matrix((0, n_var))
    b_ub = np.zeros(n_pairs)

    c = np.zeros(n_var)
    c[m_col] = 1.0
    return c, A_ub, b_ub, A_eq, np.array(eq_b), n_p


def _solve(c, A_ub, b_ub, A_eq, b_eq, backend):
    if backend == "simplex":
        res = linprog_simplex(c, A_ub.toarray(), b_ub, A_eq.toarray(), b_eq)
        return res.status, res.x, res.fun, res.iterations
    from scipy.optimize import linprog

    res = linprog(
        c,
        A_ub=A_ub if len(b_ub) else None,
        b_ub=b_ub if len(b_ub) else None,
        A_eq=A_eq,
        b_eq=b_eq,
        bounds=(0, None),
        method="highs",
    )
    status = {0: OPTIMAL, 1: ITERATION_LIMIT, 2: INFEASIBLE}.get(res.status, "error")
    return status, res.x, res.fun, int(getattr(res, "nit", 0))


def min_M(target: CorrelationTable, mode: str = LAMBDA_ONLY, backend: str = "auto") -> LpSolution:
    """Smallest M over deterministic models of ``mode`` that reproduce ``target``.

    ``backend`` is ``"simplex"`` (bundled dense solver), ``"highs"`` (scipy's
    sparse solver) or ``"auto"``, which uses the dense solver unless the
    tableau would be too large to hold comfortably.
    """
    n_x, n_y, n_s, n_t = target.values.shape
    strategies = enumerate_strategies(n_s, n_t, n_x, n_y, mode)
    c, A_ub, b_ub, A_eq, b_eq, n_p = _build_lp(target, strategies)
    if backend == "auto":
        rows = A_ub.shape[0] + A_eq.shape[0]
        cols = c.size + A_ub.shape[0] + rows
        backend = "simplex" if rows * cols <= DENSE_TABLEAU_LIMIT else "highs"
    if backend not in ("simplex", "highs"):
        raise ValueError(f"unknown backend {backend!r}")
    log.debug("min_M: %d strategies, %d vars, backend %s", len(strategies), c.size, backend)
    status, x, fun, iterations = _solve(c, A_ub, b_ub, A_eq, b_eq, backend)
    if status != OPTIMAL:
        return LpSolution(status, None, None, mode, backend, iterations)

    n_l = len(strategies)
    p = np.clip(x[:n_p].reshape(n_s, n_t, n_l), 0.0, None)
    p /= p.sum(axis=2, keepdims=True)
    used = np.flatnonzero(p.max(axis=(0, 1)) > 0)
    F = np.array([strategies.strategies[l][0] for l in used], dtype=int)
    G = np.array([strategies.strategies[l][1] for l in used], dtype=int)
    model = MdlModel(
        lambdas=tuple(int(l) for l in used),
        dist=p[:, :, used],
        alice_response=F,
        bob_response=G,
        s_labels=target.s_labels,
        t_labels=target.t_labels,
        x_labels=target.x_labels,
        y_labels=target.y_labels,
        setting_dependent=bool(mode == SETTING_DEPENDENT and (np.any(F != F[:, :1]) or np.any(G != G[:, :1]))),
    )
    return LpSolution(OPTIMAL, max(float(fun), 0.0), model, mode, backend, iterations)


def certify(solution: LpSolution, target: CorrelationTable, tol: float = CERTIFY_TOL) -> bool:
    """Independently recheck reproduction of ``target`` and the claimed M*."""
    if solution.status != OPTIMAL or solution.model is None:
        return False
    reproduced = table(solution.model, exact=False)
    if not reproduced.same_shape(target) or reproduced.max_deviation(target) > tol:
        return False
    return abs(float(variational_M(solution.model)) - solution.M_star) <= tol


def table_variational_distance(target: CorrelationTable) -> float:
    """max over setting-pair pairs of sum_{x,y} |p(x,y|s,t) - p(x,y|s',t')|."""
    rows = target.setting_rows().astype(float)
    rows = rows.reshape(-1, rows.shape[-1])
    return float(np.abs(rows[:, None, :] - rows[None, :, :]).sum(axis=-1).max())
