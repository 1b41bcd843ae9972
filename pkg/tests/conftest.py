import numpy as np
import pytest

from semiquantum.quantum import Povm, random_density

ACCEPTANCE_LINES: list = []


@pytest.fixture
def rng():
    return np.random.default_rng(20131204)


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion."""

    def record(criterion: str, passed: bool, detail: str = "") -> None:
        ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}")
        print(ACCEPTANCE_LINES[-1])

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_povm(dim: int, n_outcomes: int, rng) -> Povm:
    """Random POVM: positive operators normalized by S^{-1/2} . S^{-1/2}."""
    parts = [random_density(dim, rng, rank=rng.integers(1, dim + 1)) for _ in range(n_outcomes - 1)]
    parts.append(random_density(dim, rng))  # full rank keeps the sum invertible
    total = sum(parts)
    w, v = np.linalg.eigh(total)
    inv_sqrt = v @ np.diag(w**-0.5) @ v.conj().T
    effects = [inv_sqrt @ p @ inv_sqrt for p in parts]
    effects = [(e + e.conj().T) / 2 for e in effects]
    effects[-1] = np.eye(dim) - sum(effects[:-1])
    return Povm(tuple(effects), tuple(range(n_outcomes)))
