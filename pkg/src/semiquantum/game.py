"""Semi-quantum games and their quantum correlation tables.

A game bundles a shared state on A (x) B, the referee's input ensembles on
A' and B', and the players' joint measurements on A'A and BB'. Composite
operators are always laid out in the order A', A, B, B'.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import InvalidDimensionError, InvalidTableError, ValidationError
from .quantum import (
    Povm,
    as_density,
    basis_ket,
    bell_projection_povm,
    bloch_to_density,
    born,
    projector,
    singlet,
    tensor,
    tetrahedron_vectors,
)

NORMALIZATION_TOL = 1e-10
SPAN_TOL = 1e-10
ORTHOGONALITY_TOL = 1e-10
NEAR_ORTHOGONAL_WARN = 1e-6


class Scenario(str, Enum):
    BELL = "bell"
    STEERING = "steering"
    SEMI_QUANTUM = "semi_quantum"


@dataclass(frozen=True)
class InputEnsemble:
    """Labelled density operators the referee may hand to one player."""

    states: tuple
    labels: tuple = None

    def __post_init__(self):
        states = tuple(as_density(s) for s in self.states)
        if not states:
            raise ValidationError("input ensemble is empty")
        d = states[0].shape[0]
        if any(s.shape != (d, d) for s in states):
            raise InvalidDimensionError("all input states must share one dimension")
        labels = tuple(range(1, len(states) + 1)) if self.labels is None else tuple(self.labels)
        if len(labels) != len(states) or len(set(labels)) != len(labels):
            raise ValidationError("need one distinct label per input state")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_bloch(cls, vectors, labels=None) -> "InputEnsemble":
        return cls(tuple(bloch_to_density(v) for v in vectors), labels)

    @classmethod
    def from_kets(cls, kets, labels=None) -> "InputEnsemble":
        return cls(tuple(projector(k) for k in kets), labels)

    @property
    def dim(self) -> int:
        return self.states[0].shape[0]

    def __len__(self) -> int:
        return len(self.states)

    def gram(self) -> np.ndarray:
        """Hilbert-Schmidt overlaps Tr(rho_i rho_j)."""
        flat = np.array([s.reshape(-1) for s in self.states])
        # Tr(A B) = sum_ij A_ij B_ji, and B_ji = conj(B_ij) for Hermitian B
        return (flat @ flat.conj().T).real

    @property
    def spanning(self) -> bool:
        """Whether the states span all linear operators on C^d."""
        sv = np.linalg.svd(self.gram(), compute_uv=False)
        return int(np.sum(sv > SPAN_TOL)) == self.dim**2

    def max_overlap(self) -> float:
        g = self.gram()
        if len(self) < 2:
            return 0.0
        return float(np.max(g[~np.eye(len(self), dtype=bool)]))

    @property
    def orthogonal(self) -> bool:
        """Pairwise orthogonal, i.e. perfectly distinguishable."""
        overlap = self.max_overlap()
        if ORTHOGONALITY_TOL <= overlap < NEAR_ORTHOGONAL_WARN:
            warnings.warn(
                f"input ensemble is nearly orthogonal (max overlap {overlap:.2e}); treated as non-orthogonal",
                stacklevel=2,
            )
        return overlap < ORTHOGONALITY_TOL


@dataclass(frozen=True)
class CorrelationTable:
    """p(x, y | s, t) stored densely as ``values[x, y, s, t]`` (positional indices).

    ``values`` may be an object array of ``fractions.Fraction`` for exact tables.
    """

    values: np.ndarray
    x_labels: tuple
    y_labels: tuple
    s_labels: tuple
    t_labels: tuple

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.dtype != object:
            vals = vals.astype(float)
        for name in ("x_labels", "y_labels", "s_labels", "t_labels"):
            labels = tuple(getattr(self, name))
            if len(set(labels)) != len(labels):
                raise InvalidTableError(f"{name} must be distinct")
            object.__setattr__(self, name, labels)
        shape = (len(self.x_labels), len(self.y_labels), len(self.s_labels), len(self.t_labels))
        if vals.shape != shape:
            raise InvalidTableError(f"table shape {vals.shape} does not match label sets {shape}")
        f = vals.astype(float)
        if not np.all(np.isfinite(f)):
            raise InvalidTableError("table has non-finite entries")
        if f.min() < -NORMALIZATION_TOL or f.max() > 1 + NORMALIZATION_TOL:
            raise InvalidTableError("table entries must lie in [0, 1]")
        sums = f.sum(axis=(0, 1))
        bad = np.argwhere(np.abs(sums - 1.0) > NORMALIZATION_TOL)
        if bad.size:
            s, t = bad[0]
            raise InvalidTableError(
                f"p(.,.|s={self.s_labels[s]},t={self.t_labels[t]}) sums to {sums[s, t]:.15g}, not 1"
            )
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def exact(self) -> bool:
        return self.values.dtype == object

    def as_float(self) -> np.ndarray:
        return self.values.astype(float)

    def p(self, x, y, s, t):
        """Entry by labels."""
        return self.values[
            self.x_labels.index(x), self.y_labels.index(y), self.s_labels.index(s), self.t_labels.index(t)
        ]

    def same_shape(self, other: "CorrelationTable") -> bool:
        return (
            self.x_labels == other.x_labels
            and self.y_labels == other.y_labels
            and self.s_labels == other.s_labels
            and self.t_labels == other.t_labels
        )

    def max_deviation(self, other: "CorrelationTable") -> float:
        if not self.same_shape(other):
            raise InvalidTableError(
                "tables are defined over different index sets: "
                f"X{self.x_labels}/{other.x_labels} Y{self.y_labels}/{other.y_labels} "
                f"S{self.s_labels}/{other.s_labels} T{self.t_labels}/{other.t_labels}"
            )
        return float(np.max(np.abs(self.as_float() - other.as_float())))

    def setting_rows(self) -> np.ndarray:
        """Shape (|S|, |T|, |X|*|Y|): the outcome distribution for each setting pair."""
        v = self.values
        return np.moveaxis(v.reshape(v.shape[0] * v.shape[1], v.shape[2], v.shape[3]), 0, -1)


@dataclass(frozen=True)
class GameSpec:
    """The 5-tuple (shared state, Alice inputs, Bob inputs, Alice POVM, Bob POVM).

    ``alice_povm`` acts on A'A and ``bob_povm`` on BB' (that factor order).
    """

    shared_state: np.ndarray
    alice_inputs: InputEnsemble
    bob_inputs: InputEnsemble
    alice_povm: Povm = None
    bob_povm: Povm = None
    name: str = field(default="", compare=False)

    def __post_init__(self):
        rho = as_density(self.shared_state)
        d_a, d_b = self.alice_inputs.dim, self.bob_inputs.dim
        if rho.shape[0] != d_a * d_b:
            raise InvalidDimensionError(
                f"shared state has dimension {rho.shape[0]}, inputs require {d_a}x{d_b}={d_a * d_b}"
            )
        alice_povm = bell_projection_povm(d_a) if self.alice_povm is None else self.alice_povm
        bob_povm = bell_projection_povm(d_b) if self.bob_povm is None else self.bob_povm
        if alice_povm.dim != d_a * d_a:
            raise InvalidDimensionError(f"Alice's POVM must act on C^{d_a} (x) C^{d_a}")
        if bob_povm.dim != d_b * d_b:
            raise InvalidDimensionError(f"Bob's POVM must act on C^{d_b} (x) C^{d_b}")
        object.__setattr__(self, "shared_state", rho)
        object.__setattr__(self, "alice_povm", alice_povm)
        object.__setattr__(self, "bob_povm", bob_povm)

    @property
    def dims(self) -> tuple:
        """Factor dimensions in canonical order A', A, B, B'."""
        d_a, d_b = self.alice_inputs.dim, self.bob_inputs.dim
        return (d_a, d_a, d_b, d_b)


def joint_outcome_distribution(
    alice_input: np.ndarray,
    shared_state: np.ndarray,
    bob_input: np.ndarray,
    alice_povm: Povm,
    bob_povm: Povm,
) -> np.ndarray:
    """p(x, y) for one setting pair, computed on the full A'ABB' operator."""
    composite = tensor(alice_input, shared_state, bob_input)
    out = np.empty((len(alice_povm), len(bob_povm)))
    for (i, a), (j, b) in itertools.product(enumerate(alice_povm.effects), enumerate(bob_povm.effects)):
        out[i, j] = born(composite, np.kron(a, b))
    return out


def correlation(game: GameSpec) -> CorrelationTable:
    """Quantum correlation table p(x,y|s,t) = Tr[(A^x (x) B^y)(tau^s (x) rho (x) omega^t)]."""
    a_in, b_in = game.alice_inputs, game.bob_inputs
    values = np.empty((len(game.alice_povm), len(game.bob_povm), len(a_in), len(b_in)))
    for si, tau in enumerate(a_in.states):
        for ti, omega in enumerate(b_in.states):
            values[:, :, si, ti] = joint_outcome_distribution(
                tau, game.shared_state, omega, game.alice_povm, game.bob_povm
            )
    return CorrelationTable(
        values,
        game.alice_povm.outcome_labels,
        game.bob_povm.outcome_labels,
        a_in.labels,
        b_in.labels,
    )


def tetrahedron_ensemble() -> InputEnsemble:
    return InputEnsemble.from_bloch(tetrahedron_vectors(), labels=(1, 2, 3, 4))


def computational_ensemble(d: int = 2) -> InputEnsemble:
    return InputEnsemble.from_kets([basis_ket(d, k) for k in range(d)], labels=tuple(range(1, d + 1)))


def tetrahedron_game() -> GameSpec:
    """Singlet shared state, tetrahedron inputs on both sides, Bell-projection POVMs."""
    ens = tetrahedron_ensemble()
    return GameSpec(projector(singlet()), ens, ens, name="tetrahedron")


def steering_demo_game() -> GameSpec:
    """Steering-class variant: Alice gets {|0>, |1>}, Bob the tetrahedron states."""
    return GameSpec(
        projector(singlet()), computational_ensemble(2), tetrahedron_ensemble(), name="steering-demo"
    )


def classify(game: GameSpec) -> Scenario:
    alice_orth = game.alice_inputs.orthogonal
    bob_orth = game.bob_inputs.orthogonal
    if alice_orth and bob_orth:
        return Scenario.BELL
    if alice_orth:
        return Scenario.STEERING
    return Scenario.SEMI_QUANTUM


def alice_marginal(table: CorrelationTable) -> np.ndarray:
    """p(x|s,t) with shape (|X|, |S|, |T|)."""
    return table.values.sum(axis=1)


def bob_marginal(table: CorrelationTable) -> np.ndarray:
    """p(y|s,t) with shape (|Y|, |S|, |T|)."""
    return table.values.sum(axis=0)


def signaling_deviation(table: CorrelationTable) -> float:
    """Largest dependence of Alice's marginal on t or of Bob's marginal on s."""
    a = alice_marginal(table).astype(float)
    b = bob_marginal(table).astype(float)
    dev_a = np.max(np.abs(a - a[:, :, :1]))
    dev_b = np.max(np.abs(b - b[:, :1, :]))
    return float(max(dev_a, dev_b))
