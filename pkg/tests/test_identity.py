import math

import numpy as np
import pytest

from detflow import identity, ode
from detflow import scenarios as S
from detflow.coeffs import CoefficientSpec as C, Scenario
from detflow.errors import NotHomogeneous, NotLeftOnly, SingularStart


def _run(s):
    return s, ode.integrate(s)


def test_homogeneous_formula_on_diagonal_scenario():
    s, traj = _run(S.diagonal())
    e2 = identity.eq2_det(s, traj)
    np.testing.assert_allclose(e2.values, np.exp(-10 * traj.times), rtol=1e-12)
    assert e2.values[-1] == pytest.approx(math.exp(-2), abs=1e-8)


def test_homogeneous_and_general_identical_without_forcing():
    s, traj = _run(S.random_smooth(np.random.default_rng(5), 3, homogeneous=True))
    assert np.array_equal(identity.eq2_det(s, traj).values, identity.eq5_det(s, traj).values)


def test_general_identity_starts_at_det_x0():
    s, traj = _run(S.random_smooth(np.random.default_rng(6), 4))
    for name in ("eq5", "eq6"):
        ser = getattr(identity, f"{name}_det")(s, traj)
        assert ser.values[0] == traj.det_direct[0]


def test_nilpotent_forcing_keeps_det_one():
    s, traj = _run(S.nilpotent())
    series = identity.all_series(s, traj)
    assert series["eq2"] is None  # forced, so the homogeneous formula does not apply
    for ser in (series["eq5"], series["eq6"], series["eq4"]):
        np.testing.assert_allclose(ser.values, 1.0, atol=1e-10)


def test_sign_crossing():
    s, traj = _run(S.sign_crossing())
    e5 = identity.eq5_det(s, traj)
    assert np.max(np.abs(e5.values - (traj.times - 1))) <= 1e-8
    e6 = identity.eq6_det(s, traj)
    assert abs(e6.first_noninvertible_time - 1.0) <= s.solver.h * (1 + 1e-9)
    assert np.all(e6.values[e6.valid] < 0)
    assert not e6.valid[traj.times > 1.0 + 1e-9].any()
    assert np.isnan(e6.values[-1])


def test_left_only_identity_agrees_with_general():
    s, traj = _run(S.random_smooth(np.random.default_rng(8), 4, left_only=True))
    gap = np.abs(identity.eq4_det(s, traj).values - identity.eq5_det(s, traj).values)
    assert gap.max() <= 1e-11


def test_inverse_form_keeps_sign():
    rng = np.random.default_rng(9)
    s = S.random_invertible(rng, 3)
    s = Scenario(s.n, s.t0, s.t_end, -np.eye(3), s.a, s.b, s.f, s.solver)
    traj = ode.integrate(s)
    e6 = identity.eq6_det(s, traj)
    assert e6.first_noninvertible_time is None
    assert np.all(e6.values < 0)
    assert np.max(np.abs(e6.values - identity.eq5_det(s, traj).values)) <= 1e-7


def test_inapplicable_identities_raise():
    s, traj = _run(S.random_smooth(np.random.default_rng(1), 2))
    with pytest.raises(NotHomogeneous):
        identity.eq2_det(s, traj)
    with pytest.raises(NotLeftOnly):
        identity.eq4_det(s, traj)
    sing = Scenario(2, 0.0, 0.1, np.array([[1.0, 2.0], [2.0, 4.0]]), C.zero(2), C.zero(2),
                    C.constant(np.eye(2)), s.solver)
    with pytest.raises(SingularStart):
        identity.eq6_det(sing, ode.integrate(sing))


def test_singular_start_still_gives_general_identity():
    s = Scenario(2, 0.0, 0.5, np.zeros((2, 2)), C.zero(2), C.zero(2), C.constant(np.eye(2)),
                 S.nilpotent().solver)
    traj = ode.integrate(s)
    series = identity.all_series(s, traj)
    assert series["eq6"] is None
    np.testing.assert_allclose(series["eq5"].values, traj.times**2, atol=1e-10)
    r = identity.drift_report(s, traj, series=series)
    assert r.max_rel_drift_eq6 is None and r.eq6_inapplicable_from == 0.0


def test_blowup_flags_overflow_instead_of_inf():
    s, traj = _run(S.blowup())
    series = identity.all_series(s, traj)
    onset = 700 / 40  # log det = 40 t
    for name in ("eq5", "eq6", "eq2"):
        ser = series[name]
        k = int(np.argmax(ser.overflow))
        assert ser.overflow[-1] and abs(traj.times[k] - onset) <= s.solver.h * 1.001
        assert not np.isinf(ser.values).any()
    r = identity.drift_report(s, traj, series=series)
    assert r.terminal["eq5"] == "overflow" and r.overflow["eq2"]
    assert series["eq6"].log_magnitude[-1] == pytest.approx(800, rel=1e-9)


def test_drift_report_fields():
    s, traj = _run(S.random_smooth(np.random.default_rng(2), 3, left_only=True))
    r = identity.drift_report(s, traj)
    assert r.grid_size == len(traj) == 1001
    assert r.max_rel_drift_eq2 is None
    assert r.max_rel_drift_eq4 is not None
    assert r.max_drift() == max(r.max_rel_drift_eq5, r.max_rel_drift_eq6,
                                r.max_rel_drift_detode, r.max_rel_drift_eq4)
    assert r.terminal["t"] == 1.0


def test_relative_drift_denominator():
    d = identity.relative_drift(np.array([1.5, 30.0, np.nan]), np.array([1.0, 20.0, 1.0]))
    assert d[0] == 0.5 and d[1] == 0.5 and np.isnan(d[2])


def test_trapezoid_refinement():
    s = S.random_smooth(np.random.default_rng(4), 3)
    drifts = [identity.drift_report(si, ode.integrate(si)).max_rel_drift_eq5
              for si in (s, s.with_solver(h=5e-4))]
    assert drifts[0] / drifts[1] >= 3.5


def test_simpson_refinement():
    s = S.random_smooth(np.random.default_rng(4), 3)
    drifts = []
    for h in (1e-2, 5e-3):
        si = s.with_solver(h=h)
        drifts.append(identity.drift_report(si, ode.integrate(si), "simpson").max_rel_drift_eq5)
    assert drifts[0] / drifts[1] >= 12


def test_auto_quadrature_is_at_least_as_good():
    s, traj = _run(S.random_smooth(np.random.default_rng(12), 3))
    trap = identity.drift_report(s, traj).max_rel_drift_eq5
    auto = identity.drift_report(s, traj, "auto").max_rel_drift_eq5
    assert auto < trap
