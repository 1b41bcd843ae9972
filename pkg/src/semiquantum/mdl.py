"""Measurement-dependent local hidden-variable models.

A model fixes a finite hidden-variable set, a distribution p(lambda|s,t) for
every setting pair, and deterministic response tables for both players.
Distributions made of ``Fraction`` entries are evaluated exactly.
"""
from __future__ import annotations

import numbers
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InvalidModelError
from .game import CorrelationTable

DIST_TOL = 1e-12


def _is_rational(a: np.ndarray) -> bool:
    return a.dtype == object and all(isinstance(v, (Fraction, numbers.Integral)) for v in a.flat)


@dataclass(frozen=True)
class MdlModel:
    """A deterministic hidden-variable model with setting-dependent weights.

    Parameters
    ----------
    lambdas : tuple
        Hidden-variable labels, in the fixed order used for sampling.
    dist : array, shape (|S|, |T|, |Lambda|)
        ``dist[s, t]`` is p(. | s, t). Object arrays of Fractions are kept exact.
    alice_response, bob_response : int arrays, shape (|Lambda|, |S|) and (|Lambda|, |T|)
        Outcome *indices* into ``x_labels`` / ``y_labels``. Columns are constant
        unless ``setting_dependent`` is set.
    """

    lambdas: tuple
    dist: np.ndarray
    alice_response: np.ndarray
    bob_response: np.ndarray
    s_labels: tuple
    t_labels: tuple
    x_labels: tuple = (0, 1)
    y_labels: tuple = (0, 1)
    setting_dependent: bool = False

    def __post_init__(self):
        lambdas = tuple(self.lambdas)
        s_labels, t_labels = tuple(self.s_labels), tuple(self.t_labels)
        x_labels, y_labels = tuple(self.x_labels), tuple(self.y_labels)
        for name, labels in (("lambda", lambdas), ("S", s_labels), ("T", t_labels), ("X", x_labels), ("Y", y_labels)):
            if not labels or len(set(labels)) != len(labels):
                raise InvalidModelError(f"{name} labels must be non-empty and distinct")
        n_l, n_s, n_t = len(lambdas), len(s_labels), len(t_labels)

        dist = np.array(self.dist, dtype=object)
        if not _is_rational(dist):
            dist = np.asarray(dist, dtype=float)
        if dist.shape != (n_s, n_t, n_l):
            raise InvalidModelError(f"dist has shape {dist.shape}, expected {(n_s, n_t, n_l)}")
        fdist = dist.astype(float)
        if not np.all(np.isfinite(fdist)) or fdist.min() < 0:
            raise InvalidModelError("p(lambda|s,t) must be finite and nonnegative")
        sums = fdist.sum(axis=2)
        if np.max(np.abs(sums - 1.0)) > DIST_TOL:
            s, t = np.unravel_index(np.argmax(np.abs(sums - 1.0)), sums.shape)
            raise InvalidModelError(
                f"p(.|s={s_labels[s]},t={t_labels[t]}) sums to {sums[s, t]:.15g}, not 1"
            )

        f = self._response(self.alice_response, n_l, n_s, len(x_labels), "alice_response")
        g = self._response(self.bob_response, n_l, n_t, len(y_labels), "bob_response")
        if not self.setting_dependent and (np.any(f != f[:, :1]) or np.any(g != g[:, :1])):
            raise InvalidModelError("responses vary with the setting but setting_dependent is false")

        dist.setflags(write=False)
        for name, value in (
            ("lambdas", lambdas), ("s_labels", s_labels), ("t_labels", t_labels),
            ("x_labels", x_labels), ("y_labels", y_labels), ("dist", dist),
            ("alice_response", f), ("bob_response", g),
        ):
            object.__setattr__(self, name, value)

    @staticmethod
    def _response(r, n_l, n_set, n_out, name):
        r = np.asarray(r)
        if r.ndim == 1:
            r = np.repeat(r[:, None], n_set, axis=1)
        if r.shape != (n_l, n_set):
            raise InvalidModelError(f"{name} has shape {r.shape}, expected {(n_l, n_set)}")
        if not np.issubdtype(r.dtype, np.integer):
            if not np.all(np.equal(np.mod(r, 1), 0)):
                raise InvalidModelError(f"{name} must hold outcome indices")
            r = r.astype(int)
        if r.min() < 0 or r.max() >= n_out:
            raise InvalidModelError(f"{name} refers to an outcome outside the outcome set")
        r = r.astype(int)
        r.setflags(write=False)
        return r

    @property
    def exact(self) -> bool:
        return self.dist.dtype == object

    @property
    def shape(self) -> tuple:
        """(|S|, |T|, |Lambda|)."""
        return self.dist.shape

    def index(self, s, t) -> tuple:
        try:
            return self.s_labels.index(s), self.t_labels.index(t)
        except ValueError:
            raise InvalidModelError(f"unknown setting pair (s={s!r}, t={t!r})") from None

    def float_dist(self) -> np.ndarray:
        return self.dist.astype(float)


def paper_model() -> MdlModel:
    """Four-atom model reproducing the singlet/tetrahedron correlations."""
    same = [Fraction(1, 2), Fraction(1, 4), Fraction(1, 4), Fraction(0)]
    diff = [Fraction(7, 12), Fraction(1, 6), Fraction(1, 6), Fraction(1, 12)]
    labels = (1, 2, 3, 4)
    dist = np.empty((4, 4, 4), dtype=object)
    for si in range(4):
        for ti in range(4):
            dist[si, ti, :] = same if si == ti else diff
    return MdlModel(
        lambdas=("l1", "l2", "l3", "l4"),
        dist=dist,
        alice_response=np.array([0, 0, 1, 1]),
        bob_response=np.array([0, 1, 0, 1]),
        s_labels=labels,
        t_labels=labels,
    )


def setting_independent_model(weights, alice, bob, s_labels=(1, 2, 3, 4), t_labels=(1, 2, 3, 4)) -> MdlModel:
    """Model whose p(lambda) ignores the settings."""
    weights = np.array(weights, dtype=object if _is_rational(np.array(weights, dtype=object)) else float)
    dist = np.empty((len(s_labels), len(t_labels), len(weights)), dtype=weights.dtype)
    dist[:, :, :] = weights
    return MdlModel(
        lambdas=tuple(range(len(weights))),
        dist=dist,
        alice_response=np.asarray(alice),
        bob_response=np.asarray(bob),
        s_labels=s_labels,
        t_labels=t_labels,
    )


def evaluate(model: MdlModel, s, t) -> dict:
    """Outcome distribution {(x, y): p} obtained by pushing p(.|s,t) through (f, g)."""
    si, ti = model.index(s, t)
    zero = Fraction(0) if model.exact else 0.0
    out = {(x, y): zero for x in model.x_labels for y in model.y_labels}
    w = model.dist[si, ti]
    for li in range(len(model.lambdas)):
        x = model.x_labels[model.alice_response[li, si]]
        y = model.y_labels[model.bob_response[li, ti]]
        out[x, y] = out[x, y] + w[li]
    return out


def table(model: MdlModel, exact: bool | None = None) -> CorrelationTable:
    """Full correlation table of the model; exact when the weights are rational."""
    exact = model.exact if exact is None else exact
    if exact and not model.exact:
        raise InvalidModelError("exact evaluation needs rational weights")
    n_s, n_t, n_l = model.shape
    n_x, n_y = len(model.x_labels), len(model.y_labels)
    if exact:
        values = np.full((n_x, n_y, n_s, n_t), Fraction(0), dtype=object)
        dist = model.dist
    else:
        values = np.zeros((n_x, n_y, n_s, n_t))
        dist = model.float_dist()
    for si in range(n_s):
        for ti in range(n_t):
            for li in range(n_l):
                xi = model.alice_response[li, si]
                yi = model.bob_response[li, ti]
                values[xi, yi, si, ti] = values[xi, yi, si, ti] + dist[si, ti, li]
    return CorrelationTable(values, model.x_labels, model.y_labels, model.s_labels, model.t_labels)


def _draw_lambda(cdf: np.ndarray, last_atom: int, u):
    idx = np.searchsorted(cdf, u, side="right")
    # u can land past cdf[-1] when the cumulative sum rounds below 1
    return np.minimum(idx, last_atom)


def _lambda_sampler(weights: np.ndarray):
    weights = np.asarray(weights, dtype=float)
    cdf = np.cumsum(weights)
    last_atom = int(np.flatnonzero(weights > 0)[-1])
    return cdf, last_atom


def sample(model: MdlModel, s, t, rng: np.random.Generator) -> tuple:
    """One (x, y) draw: lambda by inverse CDF over the fixed Lambda order."""
    si, ti = model.index(s, t)
    cdf, last = _lambda_sampler(model.float_dist()[si, ti])
    li = int(_draw_lambda(cdf, last, rng.random()))
    return (
        model.x_labels[model.alice_response[li, si]],
        model.y_labels[model.bob_response[li, ti]],
    )


def _setting_counts(model: MdlModel, si: int, ti: int, n: int, rng: np.random.Generator) -> np.ndarray:
    cdf, last = _lambda_sampler(model.float_dist()[si, ti])
    lam = _draw_lambda(cdf, last, rng.random(n))
    counts = np.bincount(lam, minlength=len(model.lambdas))
    out = np.zeros((len(model.x_labels), len(model.y_labels)))
    for li, c in enumerate(counts):
        out[model.alice_response[li, si], model.bob_response[li, ti]] += c
    return out


def empirical_table(model: MdlModel, n_per_setting: int, rng, threads: int = 1) -> CorrelationTable:
    """Frequency estimate of ``table(model)`` from ``n_per_setting`` draws per setting pair.

    Every setting pair gets its own child stream spawned from ``rng``, so the
    result does not depend on ``threads``.
    """
    if n_per_setting < 1:
        raise ValueError("n_per_setting must be >= 1")
    rng = np.random.default_rng(rng)
    n_s, n_t, _ = model.shape
    pairs = [(si, ti) for si in range(n_s) for ti in range(n_t)]
    streams = rng.spawn(len(pairs))

    def work(k):
        si, ti = pairs[k]
        return _setting_counts(model, si, ti, n_per_setting, streams[k])

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, range(len(pairs))))
    else:
        results = [work(k) for k in range(len(pairs))]

    values = np.zeros((len(model.x_labels), len(model.y_labels), n_s, n_t))
    for (si, ti), counts in zip(pairs, results):
        values[:, :, si, ti] = counts / n_per_setting
    return CorrelationTable(values, model.x_labels, model.y_labels, model.s_labels, model.t_labels)
