"""Dense quantum-state and measurement primitives for small Hilbert spaces.

Operators are plain complex ``numpy`` arrays. Composite spaces use the
row-major Kronecker convention (leftmost factor most significant), and
functions that need the factor structure take an explicit ``dims`` tuple.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

from .errors import (
    InvalidBlochError,
    InvalidDimensionError,
    InvalidPovmError,
    InvalidStateError,
    NumericConsistencyError,
    ValidationError,
)

HERMITIAN_TOL = 1e-12
POSITIVITY_TOL = 1e-10
NORM_TOL = 1e-12
PROB_CLAMP_TOL = 1e-10
IMAG_TOL = 1e-8

IDENTITY2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = (SIGMA_X, SIGMA_Y, SIGMA_Z)


def as_operator(a, dims: Sequence[int] | None = None) -> np.ndarray:
    """Coerce ``a`` to a finite 2-D complex array, optionally checking ``dims``."""
    op = np.asarray(a, dtype=complex)
    if op.ndim != 2 or 0 in op.shape:
        raise InvalidDimensionError(f"operator must be a non-empty matrix, got shape {op.shape}")
    if not np.all(np.isfinite(op)):
        raise ValidationError("operator has non-finite entries")
    if dims is not None:
        dims = tuple(int(d) for d in dims)
        if any(d < 1 for d in dims) or int(np.prod(dims)) != op.shape[0]:
            raise InvalidDimensionError(
                f"subsystem dims {dims} do not multiply to operator dimension {op.shape[0]}"
            )
    return op


def as_ket(v) -> np.ndarray:
    ket = np.asarray(v, dtype=complex).reshape(-1)
    if ket.size == 0 or not np.all(np.isfinite(ket)):
        raise InvalidStateError("ket must be a non-empty finite vector")
    if abs(np.linalg.norm(ket) - 1.0) > NORM_TOL:
        raise InvalidStateError(f"ket norm {np.linalg.norm(ket)!r} differs from 1")
    return ket


def is_hermitian(op: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    return bool(np.max(np.abs(op - op.conj().T), initial=0.0) <= tol)


def as_density(rho, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Validate a density operator: Hermitian, unit trace, positive semidefinite."""
    rho = as_operator(rho)
    if rho.shape[0] != rho.shape[1]:
        raise InvalidStateError(f"density operator must be square, got {rho.shape}")
    if not is_hermitian(rho, tol):
        raise InvalidStateError("density operator is not Hermitian")
    tr = np.trace(rho)
    if abs(tr - 1.0) > tol:
        raise InvalidStateError(f"density operator has trace {tr.real:.15g}, expected 1")
    lo = np.linalg.eigvalsh(rho)[0]
    if lo < -POSITIVITY_TOL:
        raise InvalidStateError(f"density operator has negative eigenvalue {lo:.3e}")
    return rho


def tensor(*ops) -> np.ndarray:
    """Kronecker product of operators (or kets), leftmost factor most significant."""
    if not ops:
        raise ValueError("tensor needs at least one factor")
    return reduce(np.kron, (np.asarray(o, dtype=complex) for o in ops))


def basis_ket(d: int, k: int) -> np.ndarray:
    ket = np.zeros(d, dtype=complex)
    ket[k] = 1.0
    return ket


def max_entangled(d: int) -> np.ndarray:
    """|phi+_d> = sum_k |kk> / sqrt(d) on C^d (x) C^d."""
    if int(d) != d or d < 1:
        raise InvalidDimensionError(f"dimension must be a positive integer, got {d!r}")
    d = int(d)
    ket = np.zeros(d * d, dtype=complex)
    ket[np.arange(d) * (d + 1)] = 1.0 / np.sqrt(d)
    return ket


def singlet() -> np.ndarray:
    """(|01> - |10>) / sqrt(2)."""
    return np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2)


def projector(ket) -> np.ndarray:
    ket = as_ket(ket)
    return np.outer(ket, ket.conj())


def bloch_to_density(v) -> np.ndarray:
    """Qubit state (I + v.sigma) / 2 for a Bloch vector with |v| <= 1."""
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.shape != (3,) or not np.all(np.isfinite(v)):
        raise InvalidBlochError(f"Bloch vector must be a finite real 3-vector, got {v!r}")
    norm = np.linalg.norm(v)
    if norm > 1.0 + NORM_TOL:
        raise InvalidBlochError(f"Bloch vector norm {norm:.15g} exceeds 1")
    return 0.5 * (IDENTITY2 + v[0] * SIGMA_X + v[1] * SIGMA_Y + v[2] * SIGMA_Z)


def density_to_bloch(rho) -> np.ndarray:
    rho = as_operator(rho)
    if rho.shape != (2, 2):
        raise InvalidDimensionError("Bloch representation needs a qubit operator")
    return np.array([np.trace(rho @ s).real for s in PAULI])


def tetrahedron_vectors() -> np.ndarray:
    """Bloch vectors of the regular tetrahedron, rows v1..v4."""
    return np.array(
        [[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float
    ) / np.sqrt(3)


@dataclass(frozen=True)
class Povm:
    """A finite POVM: Hermitian effects in [0, I] summing to the identity."""

    effects: tuple
    outcome_labels: tuple

    def __post_init__(self):
        effects = tuple(as_operator(e) for e in self.effects)
        labels = tuple(self.outcome_labels)
        if not effects:
            raise InvalidPovmError("POVM needs at least one effect")
        if len(labels) != len(effects):
            raise InvalidPovmError("one outcome label per effect is required")
        if len(set(labels)) != len(labels):
            raise InvalidPovmError("outcome labels must be distinct")
        dim = effects[0].shape[0]
        total = np.zeros((dim, dim), dtype=complex)
        for label, e in zip(labels, effects):
            if e.shape != (dim, dim):
                raise InvalidPovmError(f"effect {label!r} has shape {e.shape}, expected {(dim, dim)}")
            if not is_hermitian(e, POSITIVITY_TOL):
                raise InvalidPovmError(f"effect {label!r} is not Hermitian")
            ev = np.linalg.eigvalsh(e)
            if ev[0] < -POSITIVITY_TOL or ev[-1] > 1 + POSITIVITY_TOL:
                raise InvalidPovmError(f"effect {label!r} has eigenvalues outside [0, 1]")
            total += e
        if np.max(np.abs(total - np.eye(dim))) > POSITIVITY_TOL:
            raise InvalidPovmError("effects do not sum to the identity")
        object.__setattr__(self, "effects", effects)
        object.__setattr__(self, "outcome_labels", labels)

    @property
    def dim(self) -> int:
        return self.effects[0].shape[0]

    def __len__(self) -> int:
        return len(self.effects)

    def effect(self, label) -> np.ndarray:
        return self.effects[self.outcome_labels.index(label)]


def bell_projection_povm(d: int) -> Povm:
    """Two-outcome measurement on C^d (x) C^d: 1 = projection onto |phi+_d>, 0 = rest."""
    hit = projector(max_entangled(d))
    return Povm(effects=(np.eye(d * d) - hit, hit), outcome_labels=(0, 1))


def born(state, effect) -> float:
    """Tr[E rho], clamped onto [0, 1] only when within round-off of the boundary."""
    state = np.asarray(state, dtype=complex)
    effect = np.asarray(effect, dtype=complex)
    if state.shape != effect.shape or state.ndim != 2:
        raise InvalidDimensionError(f"state {state.shape} and effect {effect.shape} do not match")
    tr = np.einsum("ij,ji->", effect, state)
    if abs(tr.imag) > IMAG_TOL:
        raise NumericConsistencyError(f"Tr[E rho] has imaginary part {tr.imag:.3e}")
    p = float(tr.real)
    if p < 0.0:
        if p < -PROB_CLAMP_TOL:
            raise NumericConsistencyError(f"negative probability {p:.3e}")
        return 0.0
    if p > 1.0:
        if p > 1.0 + PROB_CLAMP_TOL:
            raise NumericConsistencyError(f"probability {p:.15g} exceeds 1")
        return 1.0
    return p


def _check_dims(op: np.ndarray, dims) -> tuple:
    dims = tuple(int(d) for d in dims)
    if op.shape[0] != op.shape[1]:
        raise InvalidDimensionError("operator must be square")
    if any(d < 1 for d in dims) or int(np.prod(dims)) != op.shape[0]:
        raise InvalidDimensionError(f"dims {dims} incompatible with operator size {op.shape[0]}")
    return dims


def permute_subsystems(op, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors: factor ``perm[k]`` of the input becomes factor ``k``.

    Equivalent to conjugating by the corresponding permutation unitary.
    """
    op = as_operator(op)
    dims = _check_dims(op, dims)
    perm = tuple(int(p) for p in perm)
    n = len(dims)
    if sorted(perm) != list(range(n)):
        raise ValidationError(f"{perm} is not a permutation of {n} subsystems")
    t = op.reshape(dims + dims)
    axes = perm + tuple(p + n for p in perm)
    new_dim = int(np.prod(dims))
    return t.transpose(axes).reshape(new_dim, new_dim)


def partial_trace(op, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Trace out every factor not listed in ``keep``; kept factors stay in ascending order."""
    op = as_operator(op)
    dims = _check_dims(op, dims)
    n = len(dims)
    raw = [int(k) for k in keep]
    if len(set(raw)) != len(raw) or any(k < 0 or k >= n for k in raw):
        raise ValidationError(f"invalid subsystem indices {raw} for {n} factors")
    keep = sorted(raw)
    t = op.reshape(dims + dims)
    traced = [k for k in range(n) if k not in keep]
    # trace the highest axes first so lower indices stay valid
    for k in sorted(traced, reverse=True):
        m = t.ndim // 2
        t = np.trace(t, axis1=k, axis2=k + m)
    d_keep = int(np.prod([dims[k] for k in keep])) if keep else 1
    return t.reshape(d_keep, d_keep)


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random density operator from a Ginibre matrix (used by tests and demos)."""
    rank = d if rank is None else rank
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_pure(d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)
