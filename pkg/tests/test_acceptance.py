"""Acceptance criteria, one test each, at their stated tolerances."""
import math
import time
from fractions import Fraction

import numpy as np

from conftest import random_povm
from semiquantum.errors import PreconditionError
from semiquantum.game import (
    CorrelationTable,
    GameSpec,
    InputEnsemble,
    correlation,
    signaling_deviation,
    steering_demo_game,
    tetrahedron_game,
)
from semiquantum.mdl import MdlModel, paper_model, table
from semiquantum.metrics import (
    capacity,
    free_will_F,
    mutual_information,
    uniform_prior,
    variational_M,
)
from semiquantum.minm import LAMBDA_ONLY, SETTING_DEPENDENT, certify, min_M
from semiquantum.quantum import random_density
from semiquantum.steering import ProtocolConfig, run_rounds, simulated_table

SAME = {(0, 0): Fraction(1, 2), (0, 1): Fraction(1, 4), (1, 0): Fraction(1, 4), (1, 1): Fraction(0)}
DIFF = {(0, 0): Fraction(7, 12), (0, 1): Fraction(1, 6), (1, 0): Fraction(1, 6), (1, 1): Fraction(1, 12)}


def tetrahedron_deviation(tab) -> float:
    worst = 0.0
    for s in range(1, 5):
        for t in range(1, 5):
            for xy, p in (SAME if s == t else DIFF).items():
                worst = max(worst, abs(float(tab.p(*xy, s, t)) - float(p)))
    return worst


def test_criterion_1_tetrahedron_correlations(acceptance):
    dev = tetrahedron_deviation(correlation(tetrahedron_game()))
    ok = dev <= 1e-12
    acceptance("1 tetrahedron correlations", ok, f"max deviation {dev:.2e} (tol 1e-12)")
    assert ok


def test_criterion_2_model_equivalence(acceptance):
    exact = table(paper_model(), exact=True)
    exact_ok = all(exact.p(*xy, s, t) == p for s in range(1, 5) for t in range(1, 5)
                   for xy, p in (SAME if s == t else DIFF).items())
    dev = table(paper_model(), exact=False).max_deviation(correlation(tetrahedron_game()))
    ok = exact_ok and dev <= 1e-12
    acceptance("2 model equivalence", ok, f"exact rational match {exact_ok}, float deviation {dev:.2e} (tol 1e-12)")
    assert ok


def test_criterion_3_metrics(acceptance):
    m = paper_model()
    M = variational_M(m)
    F = free_will_F(M)
    H = mutual_information(m, uniform_prior(m))
    cap = capacity(m)
    checks = {
        "M = 1/3": M == Fraction(1, 3),
        "F = 5/6": F == Fraction(5, 6),
        "H": abs(H - 0.03705) <= 5e-5,
        "capacity": abs(cap.capacity - 0.05778) <= 1e-4,
        "P*": abs(cap.P_star - 0.593) <= 0.005,
    }
    ok = all(checks.values())
    acceptance("3 metrics", ok, f"M={M} F={F} H={H:.10f} capacity={cap.capacity:.10f} P*={cap.P_star:.7f}")
    assert ok, checks


def test_criterion_4_capacity_cross_check(acceptance, rng):
    m = paper_model()
    gaps = [abs(capacity(m, "golden").capacity - capacity(m, "blahut_arimoto").capacity)]
    # the same comparison on random two-row models over the full 16-cell prior
    for _ in range(20):
        same, diff = rng.dirichlet(np.ones(4), size=2)
        dist = np.where(np.eye(4, dtype=bool)[:, :, None], same, diff)
        model = MdlModel(m.lambdas, dist, m.alice_response, m.bob_response, m.s_labels, m.t_labels)
        gaps.append(abs(capacity(model, "golden").capacity - capacity(model, "blahut_arimoto").capacity))
    worst = max(gaps)
    ok = worst <= 1e-6
    acceptance("4 capacity cross-check", ok, f"max |golden - BA| {worst:.2e} bits over {len(gaps)} models (tol 1e-6)")
    assert ok


def test_criterion_5_steering_soundness(acceptance):
    game = steering_demo_game()
    config = ProtocolConfig(game)
    reference = correlation(game)
    exact_dev = simulated_table(config).max_deviation(reference)
    start = time.perf_counter()
    res = run_rounds(config, 10**6, 20131204)
    elapsed = time.perf_counter() - start
    emp_dev = res.table().max_deviation(reference)
    expected = {
        "forward": math.ceil(math.log2(len(game.alice_inputs))),
        "backward": math.ceil(math.log2(len(game.alice_povm))),
    }
    bits = res.bits_per_round
    ok = (exact_dev <= 1e-12 and emp_dev <= 5e-3 and elapsed < 60
          and bits["forward"] == expected["forward"] and bits["backward"] == expected["backward"])
    acceptance("5 steering soundness", ok,
               f"exact {exact_dev:.2e}, 1e6 rounds {emp_dev:.2e} in {elapsed:.2f}s, bits/round {bits}")
    assert ok


def test_criterion_6_semi_quantum_refusal(acceptance):
    try:
        ProtocolConfig(tetrahedron_game())
    except PreconditionError as exc:
        ok = "orthogonal" in str(exc)
        detail = str(exc).split(";")[0]
    else:
        ok, detail = False, "protocol accepted a non-orthogonal input family"
    acceptance("6 semi-quantum refusal", ok, detail)
    assert ok


def test_criterion_7_solver(acceptance, rng):
    target = correlation(tetrahedron_game())
    sol = min_M(target, LAMBDA_ONLY)
    repro = table(sol.model, exact=False).max_deviation(target)
    cert = certify(sol, target)
    row = rng.dirichlet(np.ones(4)).reshape(2, 2)
    const = CorrelationTable(np.broadcast_to(row[:, :, None, None], (2, 2, 3, 3)).copy(), (0, 1), (0, 1), (1, 2, 3), (1, 2, 3))
    const_M = [min_M(const, mode).M_star for mode in (LAMBDA_ONLY, SETTING_DEPENDENT)]
    ok = (sol.status == "optimal" and sol.M_star <= 1 / 3 + 1e-9 and repro <= 1e-9 and cert
          and all(M == 0 for M in const_M))
    acceptance("7 solver", ok, f"M*={sol.M_star:.12f}, reproduction {repro:.2e}, certified {cert}, "
                               f"constant-target M* {const_M}")
    assert ok


def _random_game(rng):
    d_a, d_b = int(rng.integers(2, 4)), int(rng.integers(2, 4))
    alice = InputEnsemble(tuple(random_density(d_a, rng) for _ in range(rng.integers(1, 4))))
    bob = InputEnsemble(tuple(random_density(d_b, rng) for _ in range(rng.integers(1, 4))))
    return GameSpec(random_density(d_a * d_b, rng), alice, bob,
                    random_povm(d_a * d_a, int(rng.integers(2, 4)), rng),
                    random_povm(d_b * d_b, int(rng.integers(2, 4)), rng))


def _random_model(rng):
    n_l, n_s, n_t = (int(v) for v in rng.integers(1, 6, size=3))
    alpha = rng.choice([0.1, 1.0, 10.0])
    dist = rng.dirichlet(np.full(n_l, alpha), size=(n_s, n_t))
    return MdlModel(tuple(range(n_l)), dist, rng.integers(0, 2, (n_l, n_s)), rng.integers(0, 2, (n_l, n_t)),
                    tuple(range(n_s)), tuple(range(n_t)), setting_dependent=True)


def test_criterion_8_property_suites(acceptance, rng):
    worst_norm = worst_sig = 0.0
    for _ in range(1000):
        tab = correlation(_random_game(rng))
        worst_norm = max(worst_norm, float(np.max(np.abs(tab.values.sum(axis=(0, 1)) - 1))))
        worst_sig = max(worst_sig, signaling_deviation(tab))
    bad_models = 0
    for _ in range(1000):
        m = _random_model(rng)
        n_s, n_t, n_l = m.shape
        M = variational_M(m)
        F = free_will_F(M)
        prior = rng.dirichlet(np.ones(n_s * n_t)).reshape(n_s, n_t)
        H = mutual_information(m, prior)
        bound = min(math.log2(n_l), math.log2(n_s * n_t))
        if not (0 <= M <= 2 and F == 1 - M / 2 and 0 <= H <= bound + 1e-12):
            bad_models += 1
    ok = worst_norm <= 1e-10 and worst_sig <= 1e-10 and bad_models == 0
    acceptance("8 property suites", ok, f"games: normalization {worst_norm:.1e}, signaling {worst_sig:.1e}; "
                                        f"models violating bounds {bad_models}/1000")
    assert ok
