from fractions import Fraction

import numpy as np
import pytest
from scipy.optimize import linprog

from semiquantum.errors import SizeGuardError
from semiquantum.game import CorrelationTable, correlation, tetrahedron_game
from semiquantum.mdl import paper_model, table
from semiquantum.minm import (
    LAMBDA_ONLY,
    SETTING_DEPENDENT,
    LpSolution,
    certify,
    enumerate_strategies,
    min_M,
    table_variational_distance,
)
from semiquantum.simplex import INFEASIBLE, OPTIMAL, UNBOUNDED, linprog_simplex


def make_table(values, n_s, n_t):
    return CorrelationTable(np.asarray(values, dtype=float), (0, 1), (0, 1), tuple(range(n_s)), tuple(range(n_t)))


def random_target(rng, n_s=2, n_t=2):
    rows = rng.dirichlet(np.ones(4), size=(n_s, n_t))
    return make_table(np.moveaxis(rows.reshape(n_s, n_t, 2, 2), (2, 3), (0, 1)), n_s, n_t)


def local_target(rng, n_s=2, n_t=2):
    """Mixture of deterministic setting-dependent strategies with setting-free weights."""
    strategies = list(enumerate_strategies(n_s, n_t, 2, 2, SETTING_DEPENDENT))
    w = rng.dirichlet(np.ones(len(strategies)) * 0.3)
    v = np.zeros((2, 2, n_s, n_t))
    for wk, (f, g) in zip(w, strategies):
        for s in range(n_s):
            for t in range(n_t):
                v[f[s], g[t], s, t] += wk
    return make_table(v, n_s, n_t)


def pr_box():
    v = np.zeros((2, 2, 2, 2))
    for s in range(2):
        for t in range(2):
            for x in range(2):
                v[x, x ^ (s & t), s, t] = 0.5
    return make_table(v, 2, 2)


class TestSimplex:
    def test_textbook_problem(self):
        # max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
        res = linprog_simplex([-3, -5], [[1, 0], [0, 2], [3, 2]], [4, 12, 18])
        assert res.status == OPTIMAL
        np.testing.assert_allclose(res.x, [2, 6], atol=1e-12)
        assert res.fun == pytest.approx(-36)

    def test_equality_and_negative_rhs(self):
        res = linprog_simplex([1, 1], A_ub=[[-1, -1]], b_ub=[-2], A_eq=[[1, -1]], b_eq=[0])
        assert res.status == OPTIMAL
        np.testing.assert_allclose(res.x, [1, 1], atol=1e-12)

    def test_infeasible(self):
        assert linprog_simplex([1], A_eq=[[1]], b_eq=[-1]).status == INFEASIBLE

    def test_unbounded(self):
        assert linprog_simplex([-1, 0], A_ub=[[0, 1]], b_ub=[1]).status == UNBOUNDED

    def test_redundant_equalities(self):
        res = linprog_simplex([1, 2], A_eq=[[1, 1], [2, 2]], b_eq=[1, 2])
        assert res.status == OPTIMAL
        assert res.fun == pytest.approx(1.0)

    def test_degenerate_cycling_example(self):
        # Beale's example cycles under the textbook rule without an anticycling pivot
        c = [-0.75, 150, -0.02, 6]
        A = [[0.25, -60, -0.04, 9], [0.5, -90, -0.02, 3], [0, 0, 1, 0]]
        res = linprog_simplex(c, A, [0, 0, 1])
        assert res.status == OPTIMAL
        assert res.fun == pytest.approx(-0.05, abs=1e-12)

    def test_against_highs(self, rng):
        for _ in range(200):
            n, m_ub, m_eq = rng.integers(2, 7), rng.integers(0, 5), rng.integers(0, 3)
            c = rng.normal(size=n)
            A_ub = rng.normal(size=(m_ub, n))
            b_ub = rng.normal(size=m_ub) + 1
            A_eq = rng.normal(size=(m_eq, n))
            b_eq = A_eq @ rng.random(n) if rng.random() < 0.7 else rng.normal(size=m_eq)
            # a box keeps most instances bounded
            A_ub = np.vstack([A_ub, np.eye(n)])
            b_ub = np.concatenate([b_ub, np.full(n, 5.0)])
            ours = linprog_simplex(c, A_ub, b_ub, A_eq if m_eq else None, b_eq if m_eq else None)
            ref = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq if m_eq else None, b_eq=b_eq if m_eq else None,
                          bounds=(0, None), method="highs")
            if ref.status == 0:
                assert ours.status == OPTIMAL
                assert ours.fun == pytest.approx(ref.fun, abs=1e-7)
                assert np.all(A_ub @ ours.x <= b_ub + 1e-8)
            elif ref.status == 2:
                assert ours.status == INFEASIBLE


class TestStrategies:
    def test_lambda_only_count(self):
        assert len(enumerate_strategies(4, 4, 2, 2, LAMBDA_ONLY)) == 4

    def test_setting_dependent_count(self):
        assert len(enumerate_strategies(2, 2, 2, 2, SETTING_DEPENDENT)) == 16
        assert len(enumerate_strategies(4, 4, 2, 2, SETTING_DEPENDENT)) == 256

    def test_single_setting_modes_coincide(self):
        a = enumerate_strategies(1, 1, 2, 3, LAMBDA_ONLY)
        b = enumerate_strategies(1, 1, 2, 3, SETTING_DEPENDENT)
        assert set(a) == set(b) and len(a) == 6

    def test_size_guard(self):
        with pytest.raises(SizeGuardError):
            enumerate_strategies(10, 11, 2, 2, SETTING_DEPENDENT)

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            enumerate_strategies(2, 2, 2, 2, "bogus")


class TestMinM:
    def test_tetrahedron_lambda_only(self):
        target = correlation(tetrahedron_game())
        sol = min_M(target, LAMBDA_ONLY)
        assert sol.status == OPTIMAL and sol.backend == "simplex"
        assert sol.M_star == pytest.approx(1 / 3, abs=1e-9)
        assert sol.F == pytest.approx(5 / 6, abs=1e-9)
        assert certify(sol, target)

    def test_paper_model_achieves_lambda_only_optimum(self):
        target = table(paper_model(), exact=False)
        assert min_M(target).M_star <= 1 / 3 + 1e-9

    def test_lambda_only_equals_table_distance(self, rng):
        # p(lambda|s,t) is forced to equal p(x,y|s,t) for constant strategies
        for _ in range(10):
            target = random_target(rng, 2, 3)
            assert min_M(target).M_star == pytest.approx(table_variational_distance(target), abs=1e-9)

    def test_constant_target_is_free(self, rng):
        row = rng.dirichlet(np.ones(4)).reshape(2, 2)
        target = make_table(np.broadcast_to(row[:, :, None, None], (2, 2, 3, 3)), 3, 3)
        for mode in (LAMBDA_ONLY, SETTING_DEPENDENT):
            assert min_M(target, mode).M_star == pytest.approx(0.0, abs=1e-12)

    def test_deterministic_target_uses_one_strategy(self):
        v = np.zeros((2, 2, 2, 2))
        v[1, 0] = 1
        sol = min_M(make_table(v, 2, 2))
        assert len(sol.model.lambdas) == 1
        assert sol.M_star == 0.0

    def test_local_targets_need_no_dependence(self, rng):
        for _ in range(10):
            target = local_target(rng)
            sol = min_M(target, SETTING_DEPENDENT)
            assert sol.M_star == pytest.approx(0.0, abs=1e-9)
            assert certify(sol, target)

    def test_pr_box_needs_dependence(self):
        sol = min_M(pr_box(), SETTING_DEPENDENT)
        assert sol.M_star > 0.1
        assert certify(sol, pr_box())

    def test_mode_monotonicity(self, rng):
        for _ in range(15):
            target = random_target(rng)
            lam = min_M(target, LAMBDA_ONLY).M_star
            dep = min_M(target, SETTING_DEPENDENT).M_star
            assert dep <= lam + 1e-9

    def test_backends_agree(self, rng):
        for target in [pr_box(), random_target(rng), random_target(rng)]:
            a = min_M(target, SETTING_DEPENDENT, backend="simplex")
            b = min_M(target, SETTING_DEPENDENT, backend="highs")
            assert a.M_star == pytest.approx(b.M_star, abs=1e-8)
            assert certify(a, target) and certify(b, target)

    @pytest.mark.slow
    def test_tetrahedron_setting_dependent_is_local(self):
        target = correlation(tetrahedron_game())
        sol = min_M(target, SETTING_DEPENDENT)
        assert sol.backend == "highs"
        assert sol.M_star == pytest.approx(0.0, abs=1e-9)
        assert certify(sol, target)

    def test_unknown_backend(self, rng):
        with pytest.raises(ValueError):
            min_M(random_target(rng), backend="cplex")


class TestCertify:
    def test_paper_model(self):
        target = correlation(tetrahedron_game())
        sol = LpSolution(OPTIMAL, 1 / 3, paper_model(), LAMBDA_ONLY)
        assert certify(sol, target)

    def test_shifted_mass_fails(self):
        m = paper_model()
        dist = m.float_dist().copy()
        dist[0, 1, 0] -= 1e-3
        dist[0, 1, 1] += 1e-3
        shifted = type(m)(m.lambdas, dist, m.alice_response, m.bob_response, m.s_labels, m.t_labels)
        sol = LpSolution(OPTIMAL, float(np.abs(dist[0, 0] - dist[0, 1]).sum()), shifted, LAMBDA_ONLY)
        assert not certify(sol, correlation(tetrahedron_game()))

    def test_misreported_M_fails(self):
        sol = LpSolution(OPTIMAL, 0.3, paper_model(), LAMBDA_ONLY)
        assert not certify(sol, correlation(tetrahedron_game()))

    def test_non_optimal_fails(self):
        assert not certify(LpSolution(INFEASIBLE, None, None, LAMBDA_ONLY), correlation(tetrahedron_game()))

    def test_table_distance(self):
        assert table_variational_distance(correlation(tetrahedron_game())) == pytest.approx(1 / 3, abs=1e-12)
        assert Fraction(1, 3) == sum(abs(a - b) for a, b in zip(
            [Fraction(1, 2), Fraction(1, 4), Fraction(1, 4), Fraction(0)],
            [Fraction(7, 12), Fraction(1, 6), Fraction(1, 6), Fraction(1, 12)]))
