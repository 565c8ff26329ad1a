"""Seeded property suites behind ``detflow check``.

Each property draws its cases from a ``numpy.random.Generator`` seeded from
the suite seed and the property name, so any failure can be replayed from the
printed seed and case index.  Library functions are looked up through their
modules at call time (``linalg.adjugate`` rather than a bound name), so a
patched implementation is what gets checked.
"""
from dataclasses import dataclass
import itertools
import json
import math
import sys
import zlib

import numpy as np

from detflow import identity, linalg, ode
from detflow import scenarios as S
from detflow.coeffs import eval_many
from detflow.scenario_file import scenario_to_dict

SUITES = ("linalg", "identities", "convergence")


@dataclass
class Property:
    name: str
    cases: int
    check: object  # callable(rng, index) -> (ok, inputs)


@dataclass
class Outcome:
    name: str
    cases: int
    failed: int
    first_failure: dict | None


def laplace_det(m):
    """Cofactor expansion along the first row; independent of the LU path."""
    n = len(m)
    if n == 1:
        return m[0][0]
    total = 0.0
    for j in range(n):
        minor = [row[:j] + row[j + 1:] for row in m[1:]]
        term = m[0][j] * laplace_det(minor)
        total += term if j % 2 == 0 else -term
    return total


def _mat(rng, n):
    return S.random_matrix(rng, n)


def _lst(m):
    return np.asarray(m).tolist()


# -- linalg ------------------------------------------------------------------

def _adjugate_identity(rng, i):
    n = int(rng.integers(1, 7))
    x = _mat(rng, n)
    adj = linalg.adjugate(x)
    d = linalg.det(x)
    tol = 1e-10 * max(1.0, linalg.max_norm(x) ** n)
    left = linalg.max_norm(linalg.mat_mul(x, adj) - d * np.eye(n))
    right = linalg.max_norm(linalg.mat_mul(adj, x) - d * np.eye(n))
    return left <= tol and right <= tol, {"X": _lst(x), "left": left, "right": right}


def _replacement_sums(rng, i):
    n = int(rng.integers(2, 6))
    x, f = _mat(rng, n), _mat(rng, n)
    rows = linalg.replaced_det_sum(x, f, "rows")
    cols = linalg.replaced_det_sum(x, f, "columns")
    tr = linalg.trace(linalg.mat_mul(linalg.adjugate(x), f))
    tol = 1e-11 * max(1.0, abs(tr))
    ok = abs(rows - cols) <= tol and abs(rows - tr) <= tol and abs(cols - tr) <= tol
    return ok, {"X": _lst(x), "F": _lst(f), "rows": rows, "columns": cols, "trace": tr}


def _det_vs_laplace(rng, i):
    n = int(rng.integers(1, 7))
    x = _mat(rng, n)
    d, ref = linalg.det(x), laplace_det(x.tolist())
    return abs(d - ref) <= 1e-12 * max(1.0, abs(ref)), {"X": _lst(x), "det": d, "laplace": ref}


def _duplicate_row(rng, i):
    n = int(rng.integers(2, 7))
    x = _mat(rng, n)
    a, b = rng.choice(n, size=2, replace=False)
    x[b] = x[a]
    d = linalg.det(x)
    return d == 0.0, {"X": _lst(x), "det": d}


def _trace_cyclic(rng, i):
    n = int(rng.integers(1, 7))
    x, y = _mat(rng, n), _mat(rng, n)
    a = linalg.trace(linalg.mat_mul(x, y))
    b = linalg.trace(linalg.mat_mul(y, x))
    return abs(a - b) <= 1e-12 * max(1.0, abs(a)), {"X": _lst(x), "Y": _lst(y)}


def _trace_linear(rng, i):
    n = int(rng.integers(1, 7))
    x, y = _mat(rng, n), _mat(rng, n)
    lam, mu = rng.uniform(-2, 2, size=2)
    lhs = linalg.trace(linalg.mat_add(linalg.mat_scale(lam, x), linalg.mat_scale(mu, y)))
    rhs = lam * linalg.trace(x) + mu * linalg.trace(y)
    return abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs)), {
        "X": _lst(x), "Y": _lst(y), "lambda": lam, "mu": mu}


def _inverse_residual(rng, i):
    n = int(rng.integers(1, 7))
    x = _mat(rng, n)
    if not linalg.is_invertible(x):
        return True, {}
    r = linalg.max_norm(linalg.mat_mul(x, linalg.inverse(x)) - np.eye(n))
    return r <= 1e-10 * max(1.0, linalg.max_norm(x) ** 2), {"X": _lst(x), "residual": r}


def _associativity(rng, i):
    a, b, c = (_mat(rng, 3) for _ in range(3))
    lhs = linalg.mat_mul(linalg.mat_mul(a, b), c)
    rhs = linalg.mat_mul(a, linalg.mat_mul(b, c))
    return linalg.max_norm(lhs - rhs) <= 1e-13 * max(1.0, linalg.max_norm(lhs)), {
        "A": _lst(a), "B": _lst(b), "C": _lst(c)}


LINALG = [
    Property("adjugate identity X*adj(X) = adj(X)*X = det(X)*I", 1000, _adjugate_identity),
    Property("replacement sum rows = columns = trace(adj(X)*F)", 1000, _replacement_sums),
    Property("LU determinant matches cofactor expansion", 300, _det_vs_laplace),
    Property("duplicated row gives det exactly 0", 200, _duplicate_row),
    Property("trace(XY) = trace(YX)", 500, _trace_cyclic),
    Property("trace is linear", 500, _trace_linear),
    Property("X*inverse(X) = I", 300, _inverse_residual),
    Property("matrix product is associative", 300, _associativity),
]


# -- identities ---------------------------------------------------------------

def _scenario_case(s, **extra):
    return {"scenario": scenario_to_dict(s), **extra}


def _eq5_drift(rng, i):
    s = S.random_smooth(rng)
    r = identity.drift_report(s, ode.integrate(s))
    ok = r.max_rel_drift_eq5 <= 1e-6 and r.max_rel_drift_detode <= 1e-6
    return ok, _scenario_case(s, eq5=r.max_rel_drift_eq5, det_ode=r.max_rel_drift_detode)


def _eq2_reduction(rng, i):
    s = S.random_smooth(rng, homogeneous=True)
    traj = ode.integrate(s)
    e2 = identity.eq2_det(s, traj)
    e5 = identity.eq5_det(s, traj)
    drift = float(np.max(identity.relative_drift(e2.values, traj.det_direct)))
    same = float(np.max(np.abs(e2.values - e5.values)))
    return drift <= 1e-8 and same <= 1e-12, _scenario_case(s, drift=drift, eq2_vs_eq5=same)


def _eq4_coincidence(rng, i):
    s = S.random_smooth(rng, left_only=True)
    traj = ode.integrate(s)
    gap = float(np.max(np.abs(identity.eq4_det(s, traj).values
                              - identity.eq5_det(s, traj).values)))
    return gap <= 1e-11, _scenario_case(s, gap=gap)


def _eq6_agreement(rng, i):
    s = S.random_invertible(rng)
    traj = ode.integrate(s)
    if np.min(np.abs(traj.det_direct)) < 0.1:
        return True, {}
    e5 = identity.eq5_det(s, traj)
    e6 = identity.eq6_det(s, traj)
    gap = float(np.max(np.abs(e6.values - e5.values) / np.maximum(1.0, np.abs(e5.values))))
    signs = bool(np.all(np.sign(e6.values) == np.sign(traj.det_direct[0])))
    return gap <= 1e-7 and signs and e6.first_noninvertible_time is None, \
        _scenario_case(s, gap=gap, sign_preserved=signs)


def _det_derivative(rng, i):
    s = S.random_smooth(rng)
    defect = ode.det_derivative_defect(ode.integrate(s), s)
    return defect <= 1e-5, _scenario_case(s, defect=defect)


def _sign_crossing(rng, i):
    s = S.sign_crossing()
    traj = ode.integrate(s)
    e5 = identity.eq5_det(s, traj)
    e6 = identity.eq6_det(s, traj)
    err = float(np.max(np.abs(e5.values - (traj.times - 1.0))))
    tau = e6.first_noninvertible_time
    ok = err <= 1e-8 and tau is not None and abs(tau - 1.0) <= s.solver.h * (1 + 1e-9)
    return ok, _scenario_case(s, eq5_abs_err=err, first_noninvertible_time=tau)


def _nilpotent(rng, i):
    s = S.nilpotent()
    r = identity.drift_report(s, ode.integrate(s))
    return r.max_drift() <= 1e-10, _scenario_case(s, max_drift=r.max_drift())


IDENTITIES = [
    Property("eq5 and det_ode drift <= 1e-6 (rk4 h=1e-3)", 10, _eq5_drift),
    Property("eq2 matches det_direct and equals eq5 when F = 0", 5, _eq2_reduction),
    Property("eq4 equals eq5 when B = 0", 5, _eq4_coincidence),
    Property("eq6 agrees with eq5 and keeps the sign of det X0", 5, _eq6_agreement),
    Property("d(det X)/dt = trace(adj(X) dX/dt) by central differences", 5, _det_derivative),
    Property("sign crossing: eq5 tracks through zero, eq6 stops at t=1", 1, _sign_crossing),
    Property("nilpotent forcing keeps det = 1 in every channel", 1, _nilpotent),
]


# -- convergence --------------------------------------------------------------

def _rk4_order(rng, i):
    errs = []
    for h in (1e-2, 5e-3, 2.5e-3):
        traj = ode.integrate(S.diagonal(t_end=1.0, h=h))
        errs.append(float(np.max(np.abs(traj.x_samples[-1] - S.diagonal_exact(1.0)))))
    ratios = [errs[0] / errs[1], errs[1] / errs[2]]
    return all(12 <= r <= 20 for r in ratios), {"errors": errs, "ratios": ratios}


def _trapezoid_refinement(rng, i):
    s = S.random_smooth(rng)
    coarse = identity.drift_report(s, ode.integrate(s)).max_rel_drift_eq5
    fine_s = s.with_solver(h=s.solver.h / 2)
    fine = identity.drift_report(fine_s, ode.integrate(fine_s)).max_rel_drift_eq5
    ratio = coarse / fine if fine > 0 else math.inf
    return ratio >= 3.5, _scenario_case(s, coarse=coarse, fine=fine, ratio=ratio)


def _simpson_refinement(rng, i):
    s = S.random_smooth(rng, n=int(rng.integers(2, 6)), h=1e-2)
    drifts = []
    for h in (1e-2, 5e-3):
        si = s.with_solver(h=h)
        drifts.append(identity.drift_report(si, ode.integrate(si),
                                            quadrature="simpson").max_rel_drift_eq5)
    ratio = drifts[0] / drifts[1] if drifts[1] > 0 else math.inf
    return ratio >= 12, _scenario_case(s, drifts=drifts, ratio=ratio)


def _cum_trace_simpson(rng, i):
    s = S.random_smooth(rng)
    traj = ode.integrate(s)
    tr = np.array([np.trace(a + b) for a, b in zip(eval_many(s.a, traj.times),
                                                   eval_many(s.b, traj.times))])
    ref = identity.scaled_cumulative_integral(traj.times, tr, None, "simpson")
    gap = float(np.max(np.abs(ref - traj.cum_trace)))
    return gap <= 1e-9, _scenario_case(s, gap=gap)


def _operator_residual(rng, i):
    nil = S.nilpotent()
    r_nil = ode.operator_residual(ode.integrate(nil), nil)
    diag = S.diagonal()
    r_diag = ode.operator_residual(ode.integrate(diag), diag)
    return r_nil <= 1e-10 and r_diag <= 1e-4, {"nilpotent": r_nil, "diagonal": r_diag}


def _adaptive(rng, i):
    s = S.scalar_decay().with_solver(method="rkf45", tol=1e-10)
    traj = ode.integrate(s)
    err = abs(traj.x_samples[-1, 0, 0] - 2 * math.exp(-1))
    return err <= 1e-8, {"error": err, "steps": traj.accepted}


CONVERGENCE = [
    Property("rk4 error ratio in [12, 20] when halving h", 1, _rk4_order),
    Property("trapezoid eq5 drift shrinks >= 3.5x when halving h", 5, _trapezoid_refinement),
    Property("simpson eq5 drift shrinks >= 12x when halving h", 3, _simpson_refinement),
    Property("cum_trace matches composite Simpson of tr(A+B)", 5, _cum_trace_simpson),
    Property("operator residual of rk4 trajectories", 1, _operator_residual),
    Property("rkf45 reaches the scalar closed form", 1, _adaptive),
]

REGISTRY = {"linalg": LINALG, "identities": IDENTITIES, "convergence": CONVERGENCE}


def property_rng(seed, suite, prop):
    key = zlib.crc32(f"{suite}/{prop.name}".encode())
    return np.random.default_rng([seed, key])


def run_property(suite, prop, seed):
    rng = property_rng(seed, suite, prop)
    failed = 0
    first = None
    for i in range(prop.cases):
        ok, inputs = prop.check(rng, i)
        if not ok:
            failed += 1
            if first is None:
                first = {"seed": seed, "case": i, **inputs}
    return Outcome(prop.name, prop.cases, failed, first)


def run(suite, seed, out=None):
    """Run one suite (or ``all``); print one line per property; return True iff all pass."""
    out = out or sys.stdout
    names = SUITES if suite == "all" else (suite,)
    if any(name not in REGISTRY for name in names):
        raise ValueError(f"unknown suite {suite!r}; expected one of {SUITES + ('all',)}")
    passed = failed = 0
    for name in names:
        for prop in REGISTRY[name]:
            o = run_property(name, prop, seed)
            if o.failed:
                failed += 1
                print(f"FAIL {name}: {o.name} ({o.failed}/{o.cases} cases failed)", file=out)
                print("  replay: " + json.dumps(o.first_failure, default=float), file=out)
            else:
                passed += 1
                print(f"PASS {name}: {o.name} ({o.cases} cases)", file=out)
    print(f"{passed} passed, {failed} failed (seed {seed})", file=out)
    return failed == 0


def iter_properties():
    return itertools.chain.from_iterable(((s, p) for p in REGISTRY[s]) for s in SUITES)
