import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from detflow.coeffs import CoefficientSpec as C, Scenario, SolverConfig, eval_coeff, eval_many, validate
from detflow.errors import OutOfRange, ValidationError


def test_constant():
    m = np.array([[1.0, 2.0], [3.0, 4.0]])
    c = C.constant(m)
    for t in (-3.0, 0.0, 17.5):
        np.testing.assert_array_equal(eval_coeff(c, t), m)


def test_zero():
    np.testing.assert_array_equal(eval_coeff(C.zero(3), 2.0), np.zeros((3, 3)))
    assert C.zero(2).is_zero()
    assert C.constant(np.zeros((2, 2))).is_zero()
    assert not C.constant(np.eye(2)).is_zero()


def test_tabulated_midpoint_and_knots():
    c = C.tabulated([0.0, 1.0], [np.zeros((2, 2)), np.eye(2)])
    np.testing.assert_array_equal(eval_coeff(c, 0.5), 0.5 * np.eye(2))
    rng = np.random.default_rng(0)
    knots = np.cumsum(rng.uniform(0.1, 1.0, 6))
    vals = rng.uniform(-1, 1, (6, 3, 3))
    c = C.tabulated(knots, vals)
    for k, v in zip(knots, vals):
        np.testing.assert_array_equal(eval_coeff(c, k), v)


def test_tabulated_out_of_range():
    c = C.tabulated([0.0, 1.0], [np.zeros((1, 1)), np.ones((1, 1))])
    with pytest.raises(OutOfRange):
        eval_coeff(c, 1.5)
    with pytest.raises(OutOfRange):
        eval_coeff(c, -0.1)


def test_sinusoidal():
    c = C.sinusoidal(np.zeros((2, 2)), np.eye(2), 2.0, 0.0)
    np.testing.assert_allclose(eval_coeff(c, math.pi / 4), np.eye(2), rtol=0, atol=1e-16)


def test_polynomial_horner():
    c0, c1, c2 = np.eye(2), 2 * np.eye(2), np.array([[0.0, 1.0], [0.0, 0.0]])
    c = C.polynomial([c0, c1, c2])
    t = 1.5
    np.testing.assert_allclose(eval_coeff(c, t), c0 + c1 * t + c2 * t * t, rtol=1e-15)


@given(st.floats(-50, 50))
def test_degree_zero_polynomial_is_constant(t):
    m = np.array([[0.3, -1.2], [4.0, 0.5]])
    np.testing.assert_array_equal(eval_coeff(C.polynomial([m]), t), eval_coeff(C.constant(m), t))


@given(st.floats(0, 3))
def test_eval_deterministic(t):
    rng = np.random.default_rng(4)
    c = C.sinusoidal(rng.uniform(size=(3, 3)), rng.uniform(size=(3, 3)), 1.7, 0.2)
    assert eval_coeff(c, t).tobytes() == eval_coeff(c, t).tobytes()


def test_eval_many_shape():
    c = C.polynomial([np.eye(3), np.eye(3)])
    out = eval_many(c, np.linspace(0, 1, 7))
    assert out.shape == (7, 3, 3)
    np.testing.assert_allclose(out[:, 0, 0], 1 + np.linspace(0, 1, 7))


def scenario(**kw):
    base = dict(n=2, t0=0.0, t_end=1.0, x0=np.eye(2), a=C.zero(2), b=C.zero(2), f=C.zero(2))
    base.update(kw)
    return Scenario(**base)


def test_validate_ok():
    assert validate(scenario()) is not None


def test_validate_empty_interval():
    with pytest.raises(ValidationError, match="empty interval"):
        validate(scenario(t_end=0.0))


def test_validate_dimension_mismatch():
    with pytest.raises(ValidationError, match="dimension mismatch"):
        validate(scenario(n=3, a=C.zero(3), b=C.zero(3), f=C.zero(3)))


def test_validate_lists_every_violation():
    with pytest.raises(ValidationError) as info:
        validate(scenario(t_end=-1.0, a=C.constant(np.eye(3)),
                          solver=SolverConfig(method="euler")))
    fields = [e.split(":")[0] for e in info.value.errors]
    assert fields == ["t_end", "a", "solver.method"]


@pytest.mark.parametrize("bad", [
    dict(n=0),
    dict(n=65),
    dict(t_end=math.inf),
    dict(x0=np.array([[np.nan, 0.0], [0.0, 1.0]])),
    dict(f=C.tabulated([0.2, 1.0], [np.eye(2), np.eye(2)])),
    dict(f=C.tabulated([0.0, 0.0, 1.0], [np.eye(2)] * 3)),
    dict(f=C.tabulated([0.0], [np.eye(2)])),
    dict(solver=SolverConfig(method="rk4", h=-1.0)),
    dict(solver=SolverConfig(method="rkf45", tol=0.0)),
])
def test_validate_rejects(bad):
    with pytest.raises(ValidationError):
        validate(scenario(**bad))
