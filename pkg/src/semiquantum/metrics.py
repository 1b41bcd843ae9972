"""Measures of measurement dependence for hidden-variable models.

All information quantities are in bits with the convention 0 log 0 = 0.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import ConvergenceError, InvalidPriorError, NotTwoRowError, ValidationError
from .mdl import MdlModel

log = logging.getLogger(__name__)

PRIOR_TOL = 1e-12
TWO_ROW_TOL = 1e-12
GOLDEN_TOL = 1e-10
BA_TOL = 1e-10
BA_MAX_ITER = 100_000
PRESCAN_POINTS = 200

_INV_PHI = (math.sqrt(5) - 1) / 2


def entropy(dist) -> float:
    """Shannon entropy in bits."""
    p = np.asarray(dist, dtype=float).reshape(-1)
    if p.size == 0 or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise ValidationError(f"entropy needs a normalized nonnegative vector, got sum {p.sum():.15g}")
    nz = p[p > 0]
    return float(-np.sum(nz * np.log2(nz)))


def as_prior(prior, model: MdlModel) -> np.ndarray:
    """Validate a setting prior p(s, t) against the model's setting sets."""
    p = np.asarray(prior, dtype=float)
    shape = model.shape[:2]
    if p.shape != shape:
        raise InvalidPriorError(f"prior has shape {p.shape}, expected {shape}")
    if not np.all(np.isfinite(p)) or p.min() < 0:
        raise InvalidPriorError("prior must be finite and nonnegative")
    if abs(p.sum() - 1.0) > PRIOR_TOL:
        raise InvalidPriorError(f"prior sums to {p.sum():.15g}, not 1")
    return p


def uniform_prior(model: MdlModel) -> np.ndarray:
    n_s, n_t, _ = model.shape
    return np.full((n_s, n_t), 1.0 / (n_s * n_t))


def _diagonal_mask(model: MdlModel) -> np.ndarray:
    if model.s_labels != model.t_labels:
        raise NotTwoRowError("same-label probability needs identical S and T label sets")
    return np.eye(len(model.s_labels), dtype=bool)


def prior_from_same_label_mass(model: MdlModel, P: float) -> np.ndarray:
    """Prior spreading mass P evenly over s == t cells and 1 - P over the rest."""
    diag = _diagonal_mask(model)
    prior = np.where(diag, P / diag.sum(), (1.0 - P) / (~diag).sum() if (~diag).any() else 0.0)
    return prior


def same_label_mass(prior, model: MdlModel) -> float:
    return float(np.asarray(prior, dtype=float)[_diagonal_mask(model)].sum())


def variational_M(model: MdlModel):
    """max over setting pairs of sum_lambda |p(lambda|s,t) - p(lambda|s',t')|.

    Exact (a Fraction) for rational models.
    """
    rows = model.dist.reshape(-1, model.shape[2])
    if model.exact:
        best = Fraction(0)
        for i in range(len(rows)):
            for j in range(i + 1, len(rows)):
                best = max(best, sum(abs(a - b) for a, b in zip(rows[i], rows[j])))
        return best
    return float(np.abs(rows[:, None, :] - rows[None, :, :]).sum(axis=-1).max())


def free_will_F(M):
    """Free-will fraction 1 - M/2."""
    if not 0 <= M <= 2:
        raise ValidationError(f"M must lie in [0, 2], got {M}")
    return 1 - M / 2 if isinstance(M, Fraction) else 1.0 - float(M) / 2.0


def mutual_information(model: MdlModel, prior) -> float:
    """H(S,T : Lambda) for the joint p(s,t) p(lambda|s,t)."""
    p_st = as_prior(prior, model)
    cond = model.float_dist()
    joint = p_st[:, :, None] * cond
    p_lam = joint.sum(axis=(0, 1))
    mask = joint > 0
    ratio = np.ones_like(cond)
    ratio[mask] = (cond / np.broadcast_to(p_lam, cond.shape))[mask]
    return float(max(np.sum(joint[mask] * np.log2(ratio[mask])), 0.0))


def two_row_split(model: MdlModel) -> tuple:
    """Return (p_same, p_diff): the conditionals used when s == t and s != t."""
    diag = _diagonal_mask(model)
    d = model.float_dist()
    same, diff = d[diag], d[~diag]
    if not len(same) or not len(diff):
        raise NotTwoRowError("model needs both s == t and s != t setting pairs")
    if np.max(np.abs(same - same[0])) > TWO_ROW_TOL or np.max(np.abs(diff - diff[0])) > TWO_ROW_TOL:
        raise NotTwoRowError("conditional distributions are not constant on the s == t / s != t classes")
    return same[0], diff[0]


def is_two_row(model: MdlModel) -> bool:
    try:
        two_row_split(model)
    except NotTwoRowError:
        return False
    return True


def _mi_two_row(same: np.ndarray, diff: np.ndarray, P: float) -> float:
    mix = P * same + (1.0 - P) * diff
    return max(entropy(mix) - P * entropy(same) - (1.0 - P) * entropy(diff), 0.0)


def mi_two_row(model: MdlModel, P: float) -> float:
    """H[P p_same + (1-P) p_diff] - P H[p_same] - (1-P) H[p_diff]."""
    if not 0.0 <= P <= 1.0:
        raise ValidationError(f"P must lie in [0, 1], got {P}")
    same, diff = two_row_split(model)
    return _mi_two_row(same, diff, P)


def curve(model: MdlModel, grid: int | Sequence[float] = 101) -> list:
    """(P, H) pairs along the same-label probability axis."""
    Ps = np.linspace(0.0, 1.0, grid) if isinstance(grid, (int, np.integer)) else np.asarray(grid, dtype=float)
    same, diff = two_row_split(model)
    return [(float(P), _mi_two_row(same, diff, float(P))) for P in Ps]


def curve_csv(points) -> str:
    lines = ["P,H_bits"]
    lines += [f"{P:.12g},{H:.12g}" for P, H in points]
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class CapacityResult:
    prior: np.ndarray
    capacity: float
    lower: float
    upper: float
    method: str
    iterations: int
    P_star: float | None = None


def golden_section_max(fn, lo: float, hi: float, tol: float = GOLDEN_TOL) -> tuple:
    """Maximize a unimodal ``fn`` on [lo, hi]; returns (argmax, max)."""
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = fn(d)
    x = (a + b) / 2
    return x, fn(x)


def _two_row_capacity(model: MdlModel) -> CapacityResult:
    same, diff = two_row_split(model)
    fn = lambda P: _mi_two_row(same, diff, P)  # noqa: E731
    grid = np.linspace(0.0, 1.0, PRESCAN_POINTS)
    values = np.array([fn(P) for P in grid])
    i = int(np.argmax(values))
    steps = np.sign(np.diff(values).round(14))
    if np.any(steps[i:] > 0) or np.any(steps[:i] < 0):
        log.warning("pre-scan found a non-unimodal H(P) profile; golden section may be local")
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    P_star, best = golden_section_max(fn, lo, hi)
    if values[i] > best:
        P_star, best = float(grid[i]), float(values[i])
    return CapacityResult(
        prior=prior_from_same_label_mass(model, P_star),
        capacity=best,
        lower=best,
        upper=best,
        method="golden_section",
        iterations=PRESCAN_POINTS,
        P_star=float(P_star),
    )


def blahut_arimoto(channel, tol: float = BA_TOL, max_iter: int = BA_MAX_ITER) -> CapacityResult:
    """Capacity of a discrete memoryless channel ``channel[input, output]``.

    Runs until the standard lower/upper capacity bounds are within ``tol`` bits.
    """
    W = np.asarray(channel, dtype=float)
    if W.ndim != 2 or np.any(W < 0) or np.max(np.abs(W.sum(axis=1) - 1.0)) > 1e-9:
        raise ValidationError("channel rows must be probability vectors")
    n_in = W.shape[0]
    r = np.full(n_in, 1.0 / n_in)
    support = W > 0
    logW = np.zeros_like(W)
    logW[support] = np.log(W[support])
    lower = upper = 0.0
    for it in range(1, max_iter + 1):
        q = r @ W
        logq = np.zeros_like(q)
        logq[q > 0] = np.log(q[q > 0])
        D = np.where(support, W * (logW - logq[None, :]), 0.0).sum(axis=1)
        c = np.exp(D)
        rc = r * c
        total = rc.sum()
        lower = math.log(total) / math.log(2)
        upper = float(D.max()) / math.log(2)
        r = rc / total
        if upper - lower < tol:
            return CapacityResult(r, lower, lower, upper, "blahut_arimoto", it)
    raise ConvergenceError(
        f"Blahut-Arimoto did not converge in {max_iter} iterations (gap {upper - lower:.3e} bits)",
        lower=lower,
        upper=upper,
        iterations=max_iter,
    )


def capacity(model: MdlModel, method: str = "auto") -> CapacityResult:
    """Measurement-dependence capacity: sup over setting priors of H(S,T : Lambda).

    ``method`` is ``"golden"`` (two-row models only), ``"blahut_arimoto"`` or
    ``"auto"``, which prefers the scalar search when it applies.
    """
    if method not in ("auto", "golden", "blahut_arimoto"):
        raise ValueError(f"unknown capacity method {method!r}")
    if method == "golden" or (method == "auto" and is_two_row(model)):
        return _two_row_capacity(model)
    n_s, n_t, n_l = model.shape
    res = blahut_arimoto(model.float_dist().reshape(n_s * n_t, n_l))
    prior = res.prior.reshape(n_s, n_t)
    P_star = same_label_mass(prior, model) if model.s_labels == model.t_labels else None
    return CapacityResult(prior, res.capacity, res.lower, res.upper, res.method, res.iterations, P_star)


def check_measurement_independence(model: MdlModel, tol: float = 1e-12) -> bool:
    """True iff p(lambda|s,t) is the same for every setting pair, up to ``tol``."""
    rows = model.float_dist().reshape(-1, model.shape[2])
    return bool(np.max(np.abs(rows - rows[0])) <= tol)


@dataclass(frozen=True)
class BayesDual:
    """Posterior p(s,t|lambda) indexed ``[lambda, s, t]``; rows with p(lambda)=0 are NaN."""

    posterior: np.ndarray
    defined: np.ndarray


def bayes_dual(model: MdlModel, prior) -> BayesDual:
    p_st = as_prior(prior, model)
    joint = p_st[:, :, None] * model.float_dist()
    p_lam = joint.sum(axis=(0, 1))
    defined = p_lam > 0
    post = np.full((model.shape[2],) + p_st.shape, np.nan)
    post[defined] = np.moveaxis(joint[:, :, defined] / p_lam[defined], -1, 0)
    return BayesDual(post, defined)


@dataclass(frozen=True)
class MetricsReport:
    M: object
    F: object
    H_at_prior: float
    capacity: float
    capacity_lower: float
    capacity_upper: float
    capacity_method: str
    capacity_prior: np.ndarray = field(repr=False)
    P_star: float | None = None
    P_at_prior: float | None = None

    def to_dict(self) -> dict:
        return {
            "M": float(self.M),
            "M_exact": str(self.M) if isinstance(self.M, Fraction) else None,
            "F": float(self.F),
            "F_exact": str(self.F) if isinstance(self.F, Fraction) else None,
            "H_at_prior": self.H_at_prior,
            "P_at_prior": self.P_at_prior,
            "capacity": self.capacity,
            "capacity_lower": self.capacity_lower,
            "capacity_upper": self.capacity_upper,
            "capacity_method": self.capacity_method,
            "P_star": self.P_star,
            "capacity_prior": self.capacity_prior.tolist(),
        }


def metrics_report(model: MdlModel, prior=None, method: str = "auto") -> MetricsReport:
    prior = uniform_prior(model) if prior is None else as_prior(prior, model)
    M = variational_M(model)
    cap = capacity(model, method)
    P_prior = same_label_mass(prior, model) if model.s_labels == model.t_labels else None
    return MetricsReport(
        M=M,
        F=free_will_F(M),
        H_at_prior=mutual_information(model, prior),
        capacity=cap.capacity,
        capacity_lower=cap.lower,
        capacity_upper=cap.upper,
        capacity_method=cap.method,
        capacity_prior=cap.prior,
        P_star=cap.P_star,
        P_at_prior=P_prior,
    )
