"""JSON scenario documents.

A document is one JSON object::

    {
      "n": 2, "t0": 0, "t_end": 1,
      "x0": [1, 0, 0, 1],
      "a": {"kind": "constant", "value": [1, 0, 0, 2]},
      "b": {"kind": "zero"},
      "f": {"kind": "sinusoidal", "m0": [...], "m1": [...], "omega": 2, "phi": 0},
      "solver": {"method": "rk4", "h": 0.001},
      "seed": 7
    }

Matrices are row-major flat arrays of n*n numbers (nested row lists are
accepted too).  Payload keys per kind: ``constant`` value; ``polynomial``
coeffs (list of matrices, constant term first); ``sinusoidal`` m0, m1, omega,
phi (phi defaults to 0); ``tabulated`` times, values; ``zero`` none.  ``a``,
``b`` and ``f`` default to zero; ``solver`` defaults to rk4 with h = 1e-3.
"""
import json
import math

import numpy as np

from detflow.coeffs import KINDS, CoefficientSpec, Scenario, SolverConfig, validate
from detflow.errors import ParseError, ValidationError

REQUIRED = ("n", "t0", "t_end", "x0")


def _number(value, field):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"expected a number, got {json.dumps(value)}", field=field)
    return float(value)


def _integer(value, field):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ParseError(f"expected an integer, got {json.dumps(value)}", field=field)
    return value


def _matrix(value, field, n):
    if not isinstance(value, list) or not value:
        raise ParseError("expected a non-empty array of numbers", field=field)
    if all(isinstance(row, list) for row in value):
        rows = [[_number(v, f"{field}[{i}][{j}]") for j, v in enumerate(row)]
                for i, row in enumerate(value)]
        if len({len(r) for r in rows}) != 1:
            raise ParseError("ragged nested matrix", field=field)
        return np.array(rows)
    flat = np.array([_number(v, f"{field}[{i}]") for i, v in enumerate(value)])
    k = math.isqrt(flat.size)
    if flat.size == n * n:
        return flat.reshape(n, n)
    if k * k == flat.size:
        return flat.reshape(k, k)
    raise ValidationError([f"{field}: dimension mismatch ({flat.size} entries for n = {n})"])


def _get(obj, key, field):
    if key not in obj:
        raise ParseError("missing required field", field=field)
    return obj[key]


def _coefficient(obj, field, n):
    if obj is None:
        return CoefficientSpec.zero(n)
    if not isinstance(obj, dict):
        raise ParseError("expected an object with a 'kind' key", field=field)
    kind = _get(obj, "kind", f"{field}.kind")
    if kind not in KINDS:
        raise ParseError(f"unknown kind {kind!r}; expected one of {KINDS}", field=f"{field}.kind")
    if kind == "zero":
        return CoefficientSpec.zero(n)
    if kind == "constant":
        return CoefficientSpec.constant(_matrix(_get(obj, "value", f"{field}.value"),
                                                f"{field}.value", n))
    if kind == "polynomial":
        coeffs = _get(obj, "coeffs", f"{field}.coeffs")
        if not isinstance(coeffs, list) or not coeffs:
            raise ParseError("expected a non-empty list of matrices", field=f"{field}.coeffs")
        mats = [_matrix(c, f"{field}.coeffs[{i}]", n) for i, c in enumerate(coeffs)]
        _same_shapes(mats, f"{field}.coeffs")
        return CoefficientSpec.polynomial(mats)
    if kind == "sinusoidal":
        m0 = _matrix(_get(obj, "m0", f"{field}.m0"), f"{field}.m0", n)
        m1 = _matrix(_get(obj, "m1", f"{field}.m1"), f"{field}.m1", n)
        _same_shapes([m0, m1], field)
        omega = _number(_get(obj, "omega", f"{field}.omega"), f"{field}.omega")
        phi = _number(obj.get("phi", 0.0), f"{field}.phi")
        return CoefficientSpec.sinusoidal(m0, m1, omega, phi)
    times = _get(obj, "times", f"{field}.times")
    values = _get(obj, "values", f"{field}.values")
    if not isinstance(times, list) or not isinstance(values, list):
        raise ParseError("times and values must be arrays", field=field)
    knots = [_number(t, f"{field}.times[{i}]") for i, t in enumerate(times)]
    mats = [_matrix(v, f"{field}.values[{i}]", n) for i, v in enumerate(values)]
    _same_shapes(mats, f"{field}.values")
    return CoefficientSpec.tabulated(knots, mats if mats else np.zeros((0, n, n)))


def _same_shapes(mats, field):
    if len({m.shape for m in mats}) > 1:
        raise ValidationError([f"{field}: dimension mismatch between payload matrices"])


def _solver(obj):
    if obj is None:
        return SolverConfig()
    if not isinstance(obj, dict):
        raise ParseError("expected an object", field="solver")
    method = obj.get("method", "rk4")
    if method not in ("rk4", "rkf45"):
        raise ParseError(f"unknown method {method!r}; expected 'rk4' or 'rkf45'",
                         field="solver.method")
    kw = {"method": method}
    if "h" in obj:
        kw["h"] = _number(obj["h"], "solver.h")
    if "tol" in obj:
        kw["tol"] = _number(obj["tol"], "solver.tol")
    return SolverConfig(**kw)


def scenario_from_dict(doc):
    if not isinstance(doc, dict):
        raise ParseError("top level must be a JSON object")
    for key in REQUIRED:
        _get(doc, key, key)
    n = _integer(doc["n"], "n")
    t0 = _number(doc["t0"], "t0")
    t_end = _number(doc["t_end"], "t_end")
    x0 = _matrix(doc["x0"], "x0", n)
    a, b, f = (_coefficient(doc.get(k), k, n) for k in ("a", "b", "f"))
    seed = doc.get("seed")
    if seed is not None:
        seed = _integer(seed, "seed")
    s = Scenario(n, t0, t_end, x0, a, b, f, _solver(doc.get("solver")), seed)
    return validate(s)


def loads(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from None
    return scenario_from_dict(doc)


def parse_scenario(path):
    """Read and validate a scenario document from ``path``."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return loads(text)


def _flat(m):
    return [float(v) for v in np.asarray(m).ravel()]


def coefficient_to_dict(c):
    if c.kind == "zero":
        return {"kind": "zero"}
    if c.kind == "constant":
        return {"kind": "constant", "value": _flat(c.mats[0])}
    if c.kind == "polynomial":
        return {"kind": "polynomial", "coeffs": [_flat(m) for m in c.mats]}
    if c.kind == "sinusoidal":
        return {"kind": "sinusoidal", "m0": _flat(c.mats[0]), "m1": _flat(c.mats[1]),
                "omega": c.omega, "phi": c.phi}
    return {"kind": "tabulated", "times": [float(t) for t in c.knots],
            "values": [_flat(m) for m in c.mats]}


def scenario_to_dict(s):
    solver = {"method": s.solver.method}
    solver["h" if s.solver.method == "rk4" else "tol"] = (
        s.solver.h if s.solver.method == "rk4" else s.solver.tol)
    doc = {"n": int(s.n), "t0": float(s.t0), "t_end": float(s.t_end), "x0": _flat(s.x0),
           "a": coefficient_to_dict(s.a), "b": coefficient_to_dict(s.b),
           "f": coefficient_to_dict(s.f), "solver": solver}
    if s.seed is not None:
        doc["seed"] = int(s.seed)
    return doc


def dumps(s, **kw):
    return json.dumps(scenario_to_dict(s), **kw)
