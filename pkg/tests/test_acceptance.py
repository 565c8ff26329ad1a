"""Acceptance criteria, one test each.

Every test carries ``criterion = (number, text)``; conftest prints a
PASS/FAIL line per criterion at the end of the run.
"""
import math
import shutil
import subprocess
import sys
from pathlib import Path

import numpy as np

from detflow import identity, linalg, ode
from detflow import scenarios as S

DATA = Path(__file__).parent / "data"


def criterion(number, text):
    def mark(fn):
        fn.criterion = (number, text)
        return fn
    return mark


def rng(k):
    return np.random.default_rng([20261016, k])


@criterion(1, "adjugate identity on 1000 random matrices, n in 1..6")
def test_adjugate_identity():
    g = rng(1)
    worst = 0.0
    for _ in range(1000):
        n = int(g.integers(1, 7))
        x = g.uniform(-1, 1, (n, n))
        adj, d = linalg.adjugate(x), linalg.det(x)
        tol = 1e-10 * max(1.0, linalg.max_norm(x) ** n)
        err = max(linalg.max_norm(x @ adj - d * np.eye(n)),
                  linalg.max_norm(adj @ x - d * np.eye(n)))
        worst = max(worst, err / tol)
    assert worst <= 1.0


@criterion(2, "row sum = column sum = trace(adj(X) F) on 1000 pairs, n in 2..5")
def test_replacement_sums():
    g = rng(2)
    for _ in range(1000):
        n = int(g.integers(2, 6))
        x, f = g.uniform(-1, 1, (n, n)), g.uniform(-1, 1, (n, n))
        rows = linalg.replaced_det_sum(x, f, "rows")
        cols = linalg.replaced_det_sum(x, f, "columns")
        tr = linalg.trace_of_product(linalg.adjugate(x), f)
        tol = 1e-11 * max(1.0, abs(tr))
        assert abs(rows - cols) <= tol and abs(rows - tr) <= tol and abs(cols - tr) <= tol


@criterion(3, "general identity drift <= 1e-6 on 50 smooth scenarios, >= 3.5x at h/2")
def test_general_identity_drift():
    g = rng(3)
    for _ in range(50):
        s = S.random_smooth(g)
        assert s.n <= 5
        coarse = identity.drift_report(s, ode.integrate(s)).max_rel_drift_eq5
        fine_s = s.with_solver(h=5e-4)
        fine = identity.drift_report(fine_s, ode.integrate(fine_s)).max_rel_drift_eq5
        assert coarse <= 1e-6
        assert coarse >= 3.5 * fine


@criterion(4, "homogeneous formula within 1e-8 on 20 unforced scenarios")
def test_homogeneous_reduction():
    g = rng(4)
    for _ in range(20):
        s = S.random_smooth(g, homogeneous=True)
        traj = ode.integrate(s)
        drift = identity.relative_drift(identity.eq2_det(s, traj).values, traj.det_direct)
        assert np.all(drift <= 1e-8)


@criterion(5, "left-only and general identities agree to 1e-11 when B = 0")
def test_left_only_coincidence():
    g = rng(5)
    for _ in range(20):
        s = S.random_smooth(g, left_only=True)
        traj = ode.integrate(s)
        gap = np.abs(identity.eq4_det(s, traj).values - identity.eq5_det(s, traj).values)
        assert np.all(gap <= 1e-11)


@criterion(6, "inverse form within 1e-7 of the general identity; sign crossing handled")
def test_inverse_form():
    g = rng(6)
    for _ in range(20):
        s = S.random_invertible(g)
        traj = ode.integrate(s)
        assert np.min(np.abs(traj.det_direct)) >= 0.1
        e6 = identity.eq6_det(s, traj)
        assert e6.first_noninvertible_time is None
        assert np.all(np.abs(e6.values - identity.eq5_det(s, traj).values) <= 1e-7)

    s = S.sign_crossing()
    traj = ode.integrate(s)
    tau = identity.eq6_det(s, traj).first_noninvertible_time
    assert tau is not None and abs(tau - 1.0) <= s.solver.h * (1 + 1e-9)
    e5 = identity.eq5_det(s, traj).values
    assert np.all(np.abs(e5 - traj.det_direct) <= 1e-8)
    assert np.all(np.abs(e5 - (traj.times - 1.0)) <= 1e-8)


@criterion(7, "d(det X)/dt = trace(adj(X) dX/dt) by central differences, relative 1e-5 on 10 scenarios")
def test_det_derivative_formula():
    g = rng(7)
    for _ in range(10):
        s = S.random_smooth(g)
        assert ode.det_derivative_defect(ode.integrate(s), s) <= 1e-5


@criterion(8, "rk4 terminal error ratio in [12, 20] for h in {1e-2, 5e-3}")
def test_rk4_order():
    for make in (S.diagonal, lambda h: S.diagonal(t_end=1.0, h=h)):
        for h in (1e-2, 5e-3):
            errs = []
            for hh in (h, h / 2):
                s = make(h=hh)
                traj = ode.integrate(s)
                exact = S.diagonal_exact(s.t_end)
                errs.append(np.max(np.abs(traj.x_samples[-1] - exact)))
            assert 12 <= errs[0] / errs[1] <= 20


@criterion(9, "analytic pins: nilpotent det = 1, scalar 2/e, diagonal det(0.2) = e^-2")
def test_analytic_pins():
    s = S.nilpotent()
    traj = ode.integrate(s)
    assert np.all(np.abs(traj.det_direct - 1) <= 1e-10)
    for ser in identity.all_series(s, traj).values():
        if ser is not None:
            assert np.all(np.abs(ser.values - 1) <= 1e-10)
    assert identity.drift_report(s, traj).max_drift() <= 1e-10

    traj = ode.integrate(S.scalar_decay())
    assert abs(traj.x_samples[-1, 0, 0] - 2 * math.exp(-1)) <= 1e-9

    s = S.diagonal()
    traj = ode.integrate(s)
    assert traj.times[-1] == 0.2
    assert abs(traj.det_direct[-1] - math.exp(-2)) <= 1e-8
    assert abs(identity.eq2_det(s, traj).values[-1] - math.exp(-2)) <= 1e-8


def _detflow():
    exe = shutil.which("detflow")
    return [exe] if exe else [sys.executable, "-m", "detflow"]


@criterion(10, "golden CSV byte-identical across two runs; check all --seed 42 exits 0")
def test_cli_determinism(tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}.csv"
        proc = subprocess.run(_detflow() + ["run", str(DATA / "forced.json"), "-o", str(out)],
                              capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        outs.append(out.read_bytes())
    assert outs[0] == outs[1] == (DATA / "forced.csv").read_bytes()

    proc = subprocess.run(_detflow() + ["check", "all", "--seed", "42"],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stdout + proc.stderr
    assert proc.stdout.strip().endswith("0 failed (seed 42)")
