"""The compiled and numpy kernels must agree bit for bit."""
import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from detflow import _backend, _pykernels

pytestmark = pytest.mark.skipif("cython" not in _backend.available(),
                                reason="compiled kernels not built")
if "cython" in _backend.available():
    from detflow import _ckernels
else:
    _ckernels = None

mats = st.integers(1, 6).flatmap(
    lambda n: arrays(np.float64, (3, n, n), elements=st.floats(-2, 2, width=64)))


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b), equal_nan=True)


@given(mats, st.booleans())
def test_single_matrix_kernels(abc, singular):
    a, b, f = (np.ascontiguousarray(m) for m in abc)
    if singular and a.shape[0] > 1:
        a[-1] = a[0]
    for name, args in [("det", (a,)), ("min_pivot", (a,)), ("is_invertible", (a, 1e-12)),
                       ("adjugate", (a, 1e-12)), ("cofactor_adjugate", (a,)),
                       ("matmul", (a, b)), ("trace", (a,)), ("trace_of_product", (a, f)),
                       ("sylvester_rhs", (a, b, f, a)), ("replaced_det_sum", (a, f, 0)),
                       ("replaced_det_sum", (a, f, 1)),
                       ("coupled_rhs", (a, b, f, a, 0.7, 1e-12))]:
        assert same(getattr(_pykernels, name)(*args), getattr(_ckernels, name)(*args)), name
    if _pykernels.is_invertible(a, 1e-12):
        assert same(_pykernels.inverse(a), _ckernels.inverse(a))


def test_lu_factor_agrees():
    rng = np.random.default_rng(0)
    for n in range(1, 7):
        a = rng.uniform(-1, 1, (n, n))
        assert same(_pykernels.lu_factor(a), _ckernels.lu_factor(a))


def test_rk4_and_batches_agree():
    rng = np.random.default_rng(2)
    n, steps = 3, 40
    nodes = [rng.uniform(-1, 1, (2 * steps + 1, n, n)) for _ in range(3)]
    x0 = np.eye(n) + 0.3 * rng.uniform(-1, 1, (n, n))
    py = _pykernels.rk4_run(x0, 1.0, *nodes, 0.01, 1e-12)
    c = _ckernels.rk4_run(x0, 1.0, *nodes, 0.01, 1e-12)
    assert same(py, c)
    xs, fs = py[0], np.ascontiguousarray(nodes[2][::2])
    assert same(_pykernels.batch_det(xs), _ckernels.batch_det(xs))
    assert same(_pykernels.batch_trace_adj_prod(xs, fs, 1e-12),
                _ckernels.batch_trace_adj_prod(xs, fs, 1e-12))
    assert same(_pykernels.batch_trace_inv_prod(xs, fs, 1e-12),
                _ckernels.batch_trace_inv_prod(xs, fs, 1e-12))
    assert same(_pykernels.batch_replaced_det_sum(xs, fs, 0),
                _ckernels.batch_replaced_det_sum(xs, fs, 0))


def test_rk4_reports_nonfinite_step():
    n, steps = 1, 20
    nodes = [np.full((2 * steps + 1, n, n), v) for v in (-1e6, -1e6, 0.0)]
    for k in (_pykernels, _ckernels):
        *_, fail = k.rk4_run(np.ones((1, 1)), 1.0, *nodes, 1.0, 1e-12)
        assert fail > 0


def test_backend_switching():
    start = _backend.name
    with _backend.use("python") as k:
        assert k is _pykernels and _backend.kernels is _pykernels
    assert _backend.name == start
    with pytest.raises(ValueError):
        _backend.set_backend("fortran")


def test_fallback_selected_when_extension_missing():
    import subprocess
    import sys
    code = (
        "import sys\n"
        "sys.modules['detflow._ckernels'] = None\n"  # makes the import raise ImportError
        "from detflow import _backend, scenarios, ode\n"
        "assert _backend.name == 'python' and _backend.available() == ['python']\n"
        "print(ode.integrate(scenarios.scalar_decay()).x_samples[-1, 0, 0])\n"
    )
    proc = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert abs(float(proc.stdout) - 2 * np.exp(-1)) <= 1e-9
