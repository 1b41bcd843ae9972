"""LOCC simulation of steering-game correlations.

Alice and Bob run as small state machines that talk over a classical
channel. Bob keeps the would-be shared state and an ancilla in his own lab;
Alice only ever sees her own (orthogonal) input states and the messages
addressed to her. Rounds that share a setting pair run as one batch: every
message then carries one payload per round.
"""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import NumericConsistencyError, PreconditionError, ValidationError
from .game import CorrelationTable, GameSpec, InputEnsemble, joint_outcome_distribution
from .quantum import born

ONE_WAY = "one_way"
TWO_WAY = "two_way"
VARIANTS = (ONE_WAY, TWO_WAY)

ALICE = "alice"
BOB = "bob"
REFEREE = "referee"


def discrimination_check(ensemble: InputEnsemble) -> bool:
    """True iff the states are pairwise orthogonal, so a measurement identifies them."""
    return ensemble.orthogonal


@dataclass(frozen=True)
class Message:
    sender: str
    receiver: str
    kind: str
    payload: np.ndarray
    alphabet_size: int

    @property
    def bit_cost(self) -> float:
        return math.log2(self.alphabet_size)

    @property
    def bits(self) -> int:
        return math.ceil(self.bit_cost)

    @property
    def between_parties(self) -> bool:
        return {self.sender, self.receiver} == {ALICE, BOB}

    def to_dict(self) -> dict:
        payload = self.payload.tolist()
        return {
            "sender": self.sender,
            "receiver": self.receiver,
            "kind": self.kind,
            "payload": payload[0] if len(payload) == 1 else payload,
            "bit_cost": self.bit_cost,
            "bits": self.bits,
        }


class Channel:
    """In-process classical channel. Only integer payloads are accepted."""

    def __init__(self):
        self.log: list = []
        self._inbox = {ALICE: deque(), BOB: deque(), REFEREE: deque()}

    def send(self, message: Message) -> None:
        payload = np.asarray(message.payload)
        if not np.issubdtype(payload.dtype, np.integer):
            raise TypeError(f"channel carries classical symbols only, got dtype {payload.dtype}")
        self.log.append(message)
        self._inbox[message.receiver].append(message)

    def receive(self, party: str, kind: str) -> Message:
        box = self._inbox[party]
        if not box or box[0].kind != kind:
            raise RuntimeError(f"{party} expected a {kind!r} message")
        return box.popleft()


@dataclass
class Transcript:
    messages: list
    rounds: int

    def _bits(self, sender, receiver) -> int:
        return sum(m.bits for m in self.messages if m.sender == sender and m.receiver == receiver)

    @property
    def forward_bits(self) -> int:
        """Alice -> Bob bits per round."""
        return self._bits(ALICE, BOB)

    @property
    def backward_bits(self) -> int:
        """Bob -> Alice bits per round."""
        return self._bits(BOB, ALICE)

    @property
    def communication_bits(self) -> int:
        return self.forward_bits + self.backward_bits

    def to_jsonl(self) -> str:
        return "".join(json.dumps(m.to_dict()) + "\n" for m in self.messages)


class AliceState(Enum):
    IDLE = "idle"
    HOLDING_INPUT = "holding_input"
    AWAITING_RESULT = "awaiting_result"
    DONE = "done"


class BobState(Enum):
    READY = "ready"
    HOLDING_INPUT = "holding_input"
    DONE = "done"


class Alice:
    """Identifies her orthogonal input by measurement and forwards its index."""

    def __init__(
        self, basis: InputEnsemble, n_outcomes: int, channel: Channel, variant: str, rng: np.random.Generator
    ):
        self.labels = basis.labels
        self.n_outcomes = n_outcomes
        self.projectors = _support_projectors(basis)
        self.channel = channel
        self.variant = variant
        self.rng = rng
        self.state = AliceState.IDLE
        self._input = None
        self._copies = 0
        self.index = None
        self.x = None

    def receive_input(self, quantum_state: np.ndarray, copies: int) -> None:
        if self.state is not AliceState.IDLE:
            raise RuntimeError(f"Alice cannot take an input in state {self.state}")
        self._input, self._copies = quantum_state, copies
        self.state = AliceState.HOLDING_INPUT

    def step(self) -> None:
        if self.state is AliceState.HOLDING_INPUT:
            probs = np.array([born(self._input, P) for P in self.projectors])
            if probs[len(self.labels):].sum() > 0:
                raise NumericConsistencyError("Alice's input lies outside the span of her basis")
            self.index = self.rng.choice(len(self.labels), size=self._copies, p=probs[: len(self.labels)] / probs.sum())
            self._input = None  # the measurement consumes the system
            self.channel.send(Message(ALICE, BOB, "index", self.index, len(self.labels)))
            self.state = AliceState.DONE if self.variant == ONE_WAY else AliceState.AWAITING_RESULT
        elif self.state is AliceState.AWAITING_RESULT:
            self.x = self.channel.receive(ALICE, "outcome").payload
            self.channel.send(Message(ALICE, REFEREE, "answer_x", self.x, self.n_outcomes))
            self.state = AliceState.DONE
        else:
            raise RuntimeError(f"Alice has nothing to do in state {self.state}")


class Bob:
    """Holds the shared state and an ancilla; performs both joint measurements."""

    def __init__(self, game: GameSpec, channel: Channel, variant: str, rng: np.random.Generator):
        # the bipartite state and an ancilla B0 ~ A' live in Bob's lab
        self.shared_state = game.shared_state
        self.ancilla_states = game.alice_inputs.states
        self.alice_povm = game.alice_povm
        self.bob_povm = game.bob_povm
        self.channel = channel
        self.variant = variant
        self.rng = rng
        self.state = BobState.READY
        self._input = None
        self.x = self.y = None

    def receive_input(self, quantum_state: np.ndarray) -> None:
        if self.state is not BobState.READY:
            raise RuntimeError(f"Bob cannot take an input in state {self.state}")
        self._input = quantum_state
        self.state = BobState.HOLDING_INPUT

    def step(self) -> None:
        if self.state is not BobState.HOLDING_INPUT:
            raise RuntimeError(f"Bob has nothing to do in state {self.state}")
        index = self.channel.receive(BOB, "index").payload
        n_x, n_y = len(self.alice_povm), len(self.bob_povm)
        x = np.empty(index.size, dtype=np.int64)
        y = np.empty(index.size, dtype=np.int64)
        for k in np.unique(index):
            sel = np.flatnonzero(index == k)
            # prepare B0 in pi^k, then measure A-side on B0 A and B-side on B B'
            joint = joint_outcome_distribution(
                self.ancilla_states[k], self.shared_state, self._input, self.alice_povm, self.bob_povm
            )
            xy = _inverse_cdf(joint.reshape(-1), self.rng.random(sel.size))
            x[sel], y[sel] = np.divmod(xy, n_y)
        self._input = None
        self.x, self.y = x, y
        if self.variant == TWO_WAY:
            # return Alice's answer to her
            self.channel.send(Message(BOB, ALICE, "outcome", x, n_x))
        else:
            self.channel.send(Message(BOB, REFEREE, "answer_x", x, n_x))
        self.channel.send(Message(BOB, REFEREE, "answer_y", y, n_y))
        self.state = BobState.DONE


def _inverse_cdf(p: np.ndarray, u: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(p)
    last = int(np.flatnonzero(p > 0)[-1])
    return np.minimum(np.searchsorted(cdf, u, side="right"), last)


def _support_projectors(basis: InputEnsemble) -> list:
    """Projectors onto each state's support, plus the leftover complement if nonzero."""
    projs = []
    for rho in basis.states:
        w, v = np.linalg.eigh(rho)
        keep = v[:, w > 1e-10]
        projs.append(keep @ keep.conj().T)
    rest = np.eye(basis.dim) - sum(projs)
    if np.max(np.abs(rest)) > 1e-10:
        projs.append(rest)
    return projs


@dataclass(frozen=True)
class ProtocolConfig:
    game: GameSpec
    variant: str = TWO_WAY
    prior: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValidationError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        ens = self.game.alice_inputs
        if not discrimination_check(ens):
            raise PreconditionError(
                "Alice's input states are not pairwise orthogonal "
                f"(max overlap Tr(rho_i rho_j) = {ens.max_overlap():.6g}), so they cannot be perfectly "
                "discriminated; the LOCC protocol only applies to steering games, and no LOCC "
                "simulation exists for general semi-quantum games"
            )
        if self.prior is not None:
            p = np.asarray(self.prior, dtype=float)
            if p.shape != (len(ens), len(self.game.bob_inputs)) or p.min() < 0 or abs(p.sum() - 1) > 1e-12:
                raise ValidationError("referee prior must be a normalized |S| x |T| array")
            object.__setattr__(self, "prior", p)


@dataclass
class RoundResult:
    x: object
    y: object
    transcript: Transcript


def _play(config: ProtocolConfig, si: int, ti: int, copies: int, rng: np.random.Generator):
    game = config.game
    channel = Channel()
    alice_rng, bob_rng = rng.spawn(2)
    alice = Alice(game.alice_inputs, len(game.alice_povm), channel, config.variant, alice_rng)
    bob = Bob(game, channel, config.variant, bob_rng)
    # the referee hands over the quantum inputs without revealing labels
    alice.receive_input(game.alice_inputs.states[si], copies)
    bob.receive_input(game.bob_inputs.states[ti])
    alice.step()  # measure pi^s and send the index
    bob.step()
    if config.variant == TWO_WAY:
        alice.step()
    transcript = Transcript(list(channel.log), copies)
    return bob.x, bob.y, transcript


def run_protocol(config: ProtocolConfig, s, t, rng) -> RoundResult:
    """Play one round for referee labels (s, t); returns the answer labels and transcript."""
    rng = np.random.default_rng(rng)
    game = config.game
    if s not in game.alice_inputs.labels or t not in game.bob_inputs.labels:
        raise ValidationError(f"unknown setting pair ({s!r}, {t!r})")
    si, ti = game.alice_inputs.labels.index(s), game.bob_inputs.labels.index(t)
    x, y, transcript = _play(config, si, ti, 1, rng)
    return RoundResult(
        game.alice_povm.outcome_labels[int(x[0])], game.bob_povm.outcome_labels[int(y[0])], transcript
    )


@dataclass
class RoundsResult:
    """Per-round indices (positional) plus the batch transcripts, in round order."""

    s: np.ndarray
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    transcripts: list
    labels: tuple

    @property
    def rounds(self) -> int:
        return self.s.size

    @property
    def bits_per_round(self) -> dict:
        tr = self.transcripts[0]
        return {"forward": tr.forward_bits, "backward": tr.backward_bits, "total": tr.communication_bits}

    @property
    def total_bits(self) -> int:
        return sum(tr.communication_bits * tr.rounds for tr in self.transcripts)

    def table(self) -> CorrelationTable:
        x_l, y_l, s_l, t_l = self.labels
        counts = np.zeros((len(x_l), len(y_l), len(s_l), len(t_l)))
        np.add.at(counts, (self.x, self.y, self.s, self.t), 1)
        per_setting = counts.sum(axis=(0, 1))
        if np.any(per_setting == 0):
            raise ValidationError("some setting pairs were never drawn; increase the number of rounds")
        return CorrelationTable(counts / per_setting, x_l, y_l, s_l, t_l)

    def rows_csv(self) -> str:
        x_l, y_l, s_l, t_l = self.labels
        lines = ["s,t,x,y"]
        lines += [f"{s_l[a]},{t_l[b]},{x_l[c]},{y_l[d]}" for a, b, c, d in zip(self.s, self.t, self.x, self.y)]
        return "\n".join(lines) + "\n"


def run_rounds(config: ProtocolConfig, n_rounds: int, rng) -> RoundsResult:
    """Referee draws (s, t) from the prior each round; rounds with equal settings run batched."""
    if n_rounds < 1:
        raise ValueError("n_rounds must be >= 1")
    rng = np.random.default_rng(rng)
    game = config.game
    n_s, n_t = len(game.alice_inputs), len(game.bob_inputs)
    prior = np.full(n_s * n_t, 1.0 / (n_s * n_t)) if config.prior is None else config.prior.reshape(-1)
    referee_rng, play_rng = rng.spawn(2)
    st = _inverse_cdf(prior, referee_rng.random(n_rounds))
    s, t = np.divmod(st, n_t)
    x = np.empty(n_rounds, dtype=np.int64)
    y = np.empty(n_rounds, dtype=np.int64)
    transcripts = []
    streams = play_rng.spawn(n_s * n_t)
    for k in range(n_s * n_t):
        sel = np.flatnonzero(st == k)
        if sel.size == 0:
            continue
        bx, by, tr = _play(config, *divmod(k, n_t), sel.size, streams[k])
        x[sel], y[sel] = bx, by
        transcripts.append(tr)
    labels = (
        game.alice_povm.outcome_labels,
        game.bob_povm.outcome_labels,
        game.alice_inputs.labels,
        game.bob_inputs.labels,
    )
    return RoundsResult(s, t, x, y, transcripts, labels)


def simulated_table(config: ProtocolConfig) -> CorrelationTable:
    """Exact output distribution of the protocol.

    Follows the protocol path: Alice's measurement statistics on pi^s give the
    index she sends, and Bob measures with pi^(sent index) on his ancilla.
    """
    game = config.game
    projs = _support_projectors(game.alice_inputs)[: len(game.alice_inputs)]
    n_x, n_y = len(game.alice_povm), len(game.bob_povm)
    n_s, n_t = len(game.alice_inputs), len(game.bob_inputs)
    bob_joint = np.empty((n_s, n_t, n_x, n_y))
    for k, anc in enumerate(game.alice_inputs.states):
        for ti, omega in enumerate(game.bob_inputs.states):
            bob_joint[k, ti] = joint_outcome_distribution(anc, game.shared_state, omega, game.alice_povm, game.bob_povm)
    values = np.zeros((n_x, n_y, n_s, n_t))
    for si, pi in enumerate(game.alice_inputs.states):
        sent = np.array([born(pi, P) for P in projs])
        for ti in range(n_t):
            values[:, :, si, ti] = np.tensordot(sent, bob_joint[:, ti], axes=1)
    return CorrelationTable(
        values,
        game.alice_povm.outcome_labels,
        game.bob_povm.outcome_labels,
        game.alice_inputs.labels,
        game.bob_inputs.labels,
    )
