"""JSON / CSV encodings of games, tables, models and solver results.

Complex matrices are nested lists whose entries are ``[re, im]`` pairs (a
bare real number is accepted on input). Probabilities may be given as
numbers or as exact rational strings such as ``"7/12"``.
"""
from __future__ import annotations

import numbers
from fractions import Fraction

import numpy as np

from .errors import ValidationError
from .game import CorrelationTable, GameSpec, InputEnsemble
from .mdl import MdlModel
from .minm import LpSolution
from .quantum import Povm, as_ket, projector


def _fail(field: str, msg: str):
    raise ValidationError(f"field '{field}': {msg}")


def _require(d: dict, key: str, where: str = ""):
    if not isinstance(d, dict):
        _fail(where or "<root>", "expected a JSON object")
    if key not in d:
        _fail(f"{where}.{key}" if where else key, "missing")
    return d[key]


def complex_to_json(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def matrix_to_json(m) -> list:
    return [[complex_to_json(z) for z in row] for row in np.asarray(m)]


def _complex_from_json(v, field):
    if isinstance(v, bool):
        _fail(field, "expected a number or [re, im]")
    if isinstance(v, numbers.Real):
        return complex(v)
    if isinstance(v, list) and len(v) == 2 and all(isinstance(a, numbers.Real) and not isinstance(a, bool) for a in v):
        return complex(v[0], v[1])
    _fail(field, f"expected a number or [re, im], got {v!r}")


def matrix_from_json(obj, field: str) -> np.ndarray:
    if not isinstance(obj, list) or not obj or not all(isinstance(r, list) for r in obj):
        _fail(field, "expected a non-empty list of rows")
    n_cols = len(obj[0])
    if any(len(r) != n_cols for r in obj):
        _fail(field, "rows have different lengths")
    return np.array(
        [[_complex_from_json(v, f"{field}[{i}][{j}]") for j, v in enumerate(r)] for i, r in enumerate(obj)]
    )


def vector_from_json(obj, field: str) -> np.ndarray:
    if not isinstance(obj, list) or not obj:
        _fail(field, "expected a non-empty list")
    return np.array([_complex_from_json(v, f"{field}[{i}]") for i, v in enumerate(obj)])


def number_from_json(v, field: str):
    """A float, or an exact Fraction for integers and "p/q" strings."""
    if isinstance(v, bool):
        _fail(field, "expected a number")
    if isinstance(v, numbers.Integral):
        return Fraction(int(v))
    if isinstance(v, numbers.Real):
        return float(v)
    if isinstance(v, str):
        try:
            return Fraction(v)
        except (ValueError, ZeroDivisionError):
            pass
    _fail(field, f"expected a number or rational string, got {v!r}")


def _labels(obj, field, default):
    if obj is None:
        return tuple(default)
    if not isinstance(obj, list) or not obj:
        _fail(field, "expected a non-empty list of labels")
    return tuple(obj)


# -- games ------------------------------------------------------------------

def ensemble_from_json(obj, field: str) -> InputEnsemble:
    fmt = _require(obj, "format", field)
    states = _require(obj, "states", field)
    if not isinstance(states, list) or not states:
        _fail(f"{field}.states", "expected a non-empty list")
    labels = _labels(obj.get("labels"), f"{field}.labels", range(1, len(states) + 1))
    try:
        if fmt == "bloch":
            vecs = []
            for i, v in enumerate(states):
                if not isinstance(v, list) or len(v) != 3:
                    _fail(f"{field}.states[{i}]", "Bloch vector must have 3 components")
                vecs.append([float(a) for a in v])
            return InputEnsemble.from_bloch(vecs, labels)
        if fmt == "ket":
            kets = [as_ket(vector_from_json(v, f"{field}.states[{i}]")) for i, v in enumerate(states)]
            return InputEnsemble.from_kets(kets, labels)
        if fmt == "matrix":
            mats = [matrix_from_json(m, f"{field}.states[{i}]") for i, m in enumerate(states)]
            return InputEnsemble(tuple(mats), labels)
    except ValidationError as exc:
        if str(exc).startswith("field "):
            raise
        _fail(field, str(exc))
    _fail(f"{field}.format", f"must be 'bloch', 'ket' or 'matrix', got {fmt!r}")


def ensemble_to_json(ens: InputEnsemble) -> dict:
    return {"format": "matrix", "labels": list(ens.labels), "states": [matrix_to_json(s) for s in ens.states]}


def _povm_from_json(obj, field):
    if obj is None:
        return None
    if isinstance(obj, dict):
        effects = _require(obj, "effects", field)
        labels = obj.get("labels")
    else:
        effects, labels = obj, None
    if not isinstance(effects, list) or not effects:
        _fail(field, "expected a non-empty list of effect matrices")
    mats = [matrix_from_json(m, f"{field}[{i}]") for i, m in enumerate(effects)]
    labels = _labels(labels, f"{field}.labels", range(len(mats)))
    try:
        return Povm(tuple(mats), labels)
    except ValidationError as exc:
        _fail(field, str(exc))


def _povm_to_json(povm: Povm) -> dict:
    return {"labels": list(povm.outcome_labels), "effects": [matrix_to_json(e) for e in povm.effects]}


def game_from_json(obj) -> GameSpec:
    state_obj = _require(obj, "shared_state")
    if isinstance(state_obj, dict):
        state = projector(as_ket(vector_from_json(_require(state_obj, "ket", "shared_state"), "shared_state.ket")))
    else:
        state = matrix_from_json(state_obj, "shared_state")
    alice = ensemble_from_json(_require(obj, "alice_inputs"), "alice_inputs")
    bob = ensemble_from_json(_require(obj, "bob_inputs"), "bob_inputs")
    a_povm = _povm_from_json(obj.get("alice_povm"), "alice_povm")
    b_povm = _povm_from_json(obj.get("bob_povm"), "bob_povm")
    try:
        return GameSpec(state, alice, bob, a_povm, b_povm, name=str(obj.get("name", "")))
    except ValidationError as exc:
        _fail("shared_state" if "state" in str(exc) else "<game>", str(exc))


def game_to_json(game: GameSpec) -> dict:
    return {
        "name": game.name,
        "shared_state": matrix_to_json(game.shared_state),
        "alice_inputs": ensemble_to_json(game.alice_inputs),
        "bob_inputs": ensemble_to_json(game.bob_inputs),
        "alice_povm": _povm_to_json(game.alice_povm),
        "bob_povm": _povm_to_json(game.bob_povm),
    }


# -- tables -----------------------------------------------------------------

def table_to_json(tab: CorrelationTable) -> dict:
    return {
        "x_labels": list(tab.x_labels),
        "y_labels": list(tab.y_labels),
        "s_labels": list(tab.s_labels),
        "t_labels": list(tab.t_labels),
        "values": tab.as_float().tolist(),
    }


def table_from_json(obj) -> CorrelationTable:
    values = _require(obj, "values")
    labels = {k: _require(obj, k) for k in ("x_labels", "y_labels", "s_labels", "t_labels")}
    try:
        arr = np.array(values, dtype=object)
        conv = np.vectorize(lambda v: number_from_json(v, "values"), otypes=[object])(arr)
        if not all(isinstance(v, Fraction) for v in conv.flat):
            conv = conv.astype(float)
        return CorrelationTable(conv, **{k: tuple(v) for k, v in labels.items()})
    except ValidationError as exc:
        if str(exc).startswith("field "):
            raise
        _fail("values", str(exc))
    except (ValueError, TypeError) as exc:
        _fail("values", f"not a rectangular numeric array ({exc})")


def table_to_csv(tab: CorrelationTable) -> str:
    """One row per setting pair: ``s,t,p_<x>_<y>,...`` with 12 significant digits."""
    vals = tab.as_float()
    head = ["s", "t"] + [f"p_{x}_{y}" for x in tab.x_labels for y in tab.y_labels]
    lines = [",".join(head)]
    for si, s in enumerate(tab.s_labels):
        for ti, t in enumerate(tab.t_labels):
            cells = [f"{vals[xi, yi, si, ti]:.12g}" for xi in range(len(tab.x_labels)) for yi in range(len(tab.y_labels))]
            lines.append(",".join([str(s), str(t)] + cells))
    return "\n".join(lines) + "\n"


# -- models -----------------------------------------------------------------

def _setting_key(s, t) -> str:
    return f"{s},{t}"


def _parse_label(text: str):
    try:
        return int(text)
    except ValueError:
        return text


def model_to_json(model: MdlModel) -> dict:
    dist = {}
    for si, s in enumerate(model.s_labels):
        for ti, t in enumerate(model.t_labels):
            dist[_setting_key(s, t)] = [str(v) if model.exact else float(v) for v in model.dist[si, ti]]
    xl, yl = model.x_labels, model.y_labels
    if model.setting_dependent:
        f = [[xl[i] for i in row] for row in model.alice_response]
        g = [[yl[i] for i in row] for row in model.bob_response]
    else:
        f = [xl[i] for i in model.alice_response[:, 0]]
        g = [yl[i] for i in model.bob_response[:, 0]]
    return {
        "lambda": list(model.lambdas),
        "s_labels": list(model.s_labels),
        "t_labels": list(model.t_labels),
        "x_labels": list(xl),
        "y_labels": list(yl),
        "dist": dist,
        "f": f,
        "g": g,
        "setting_dependent": bool(model.setting_dependent),
    }


def model_from_json(obj) -> MdlModel:
    lambdas = _labels(_require(obj, "lambda"), "lambda", ())
    dist_obj = _require(obj, "dist")
    if not isinstance(dist_obj, dict) or not dist_obj:
        _fail("dist", "expected an object mapping 's,t' to probability vectors")
    keys = []
    for key in dist_obj:
        parts = key.split(",")
        if len(parts) != 2:
            _fail(f"dist.{key}", "keys must look like 's,t'")
        keys.append((_parse_label(parts[0].strip()), _parse_label(parts[1].strip())))
    s_labels = _labels(obj.get("s_labels"), "s_labels", dict.fromkeys(k[0] for k in keys))
    t_labels = _labels(obj.get("t_labels"), "t_labels", dict.fromkeys(k[1] for k in keys))
    x_labels = _labels(obj.get("x_labels"), "x_labels", (0, 1))
    y_labels = _labels(obj.get("y_labels"), "y_labels", (0, 1))
    dist = np.empty((len(s_labels), len(t_labels), len(lambdas)), dtype=object)
    seen = set()
    for (s, t), (key, vec) in zip(keys, dist_obj.items()):
        if s not in s_labels or t not in t_labels:
            _fail(f"dist.{key}", "setting pair not in s_labels x t_labels")
        if not isinstance(vec, list) or len(vec) != len(lambdas):
            _fail(f"dist.{key}", f"expected {len(lambdas)} probabilities")
        dist[s_labels.index(s), t_labels.index(t)] = [number_from_json(v, f"dist.{key}[{i}]") for i, v in enumerate(vec)]
        seen.add((s, t))
    missing = [(s, t) for s in s_labels for t in t_labels if (s, t) not in seen]
    if missing:
        _fail("dist", f"missing setting pairs {missing[:4]}")
    if not all(isinstance(v, Fraction) for v in dist.flat):
        dist = dist.astype(float)
    setting_dependent = bool(obj.get("setting_dependent", False))

    def responses(name, labels, n_set):
        raw = _require(obj, name)
        arr = np.array(raw, dtype=object)
        if arr.shape not in ((len(lambdas),), (len(lambdas), n_set)):
            _fail(name, f"expected {len(lambdas)} outcomes (or a {len(lambdas)}x{n_set} table)")
        try:
            return np.vectorize(labels.index, otypes=[int])(arr)
        except ValueError:
            _fail(name, f"contains an outcome outside {list(labels)}")

    f = responses("f", x_labels, len(s_labels))
    g = responses("g", y_labels, len(t_labels))
    try:
        return MdlModel(lambdas, dist, f, g, s_labels, t_labels, x_labels, y_labels, setting_dependent)
    except ValidationError as exc:
        _fail("<model>", str(exc))


def prior_from_json(obj, model: MdlModel) -> np.ndarray:
    """Prior as a nested |S| x |T| list, or an object mapping 's,t' to weights."""
    n_s, n_t = len(model.s_labels), len(model.t_labels)
    if isinstance(obj, dict) and "prior" in obj:
        obj = obj["prior"]
    if isinstance(obj, dict):
        out = np.zeros((n_s, n_t))
        for key, w in obj.items():
            s, _, t = key.partition(",")
            s, t = _parse_label(s.strip()), _parse_label(t.strip())
            if s not in model.s_labels or t not in model.t_labels:
                _fail(f"prior.{key}", "unknown setting pair")
            out[model.s_labels.index(s), model.t_labels.index(t)] = float(number_from_json(w, f"prior.{key}"))
        return out
    try:
        arr = np.array(obj, dtype=float)
    except (TypeError, ValueError):
        _fail("prior", "expected a numeric |S| x |T| array")
    if arr.shape != (n_s, n_t):
        _fail("prior", f"expected shape {(n_s, n_t)}, got {arr.shape}")
    return arr


# -- solver -----------------------------------------------------------------

def solution_to_json(sol: LpSolution) -> dict:
    return {
        "status": sol.status,
        "mode": sol.mode,
        "backend": sol.backend,
        "iterations": sol.iterations,
        "M_star": sol.M_star,
        "F": sol.F,
        "model": None if sol.model is None else model_to_json(sol.model),
    }
