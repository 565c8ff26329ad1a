"""Pure-Python (numpy) kernels.

Every routine here is mirrored operation for operation by ``_ckernels.pyx``:
same pivot choice, same summation order, no fused multiply-add.  The two
backends therefore return bit-identical results and either one can serve as
the reference for the other.

All array arguments are float64 and C-contiguous; callers in ``linalg`` and
``ode`` take care of the conversion.
"""
import numpy as np

DET_ZERO = 1e-300

# overflow is reported by the callers (NonFiniteState, overflow markers), as in C
def _quiet(fn):
    return np.errstate(over="ignore", invalid="ignore")(fn)


def lu_factor(a):
    """Partially pivoted LU of a copy of ``a``.

    Returns ``(lu, perm, sign, zero_col, min_pivot)``.  ``zero_col`` is set
    when some pivot column is entirely below ``DET_ZERO`` in magnitude; that
    column is then skipped.
    """
    lu = np.array(a, dtype=np.float64, order="C")
    n = lu.shape[0]
    perm = np.arange(n)
    sign = 1.0
    zero_col = False
    min_pivot = np.inf
    for k in range(n):
        col = np.abs(lu[k:, k])
        p = k + int(np.argmax(col))
        big = float(col[p - k])
        if p != k:
            lu[[k, p]] = lu[[p, k]]
            perm[[k, p]] = perm[[p, k]]
            sign = -sign
        if big < min_pivot:
            min_pivot = big
        if big < DET_ZERO:
            zero_col = True
            continue
        if k + 1 < n:
            l = lu[k + 1:, k] / lu[k, k]
            lu[k + 1:, k] = l
            lu[k + 1:, k + 1:] -= np.outer(l, lu[k, k + 1:])
    return lu, perm, sign, zero_col, min_pivot


def _det_from_lu(lu, sign, zero_col):
    if zero_col:
        return 0.0
    d = sign
    for k in range(lu.shape[0]):
        d *= float(lu[k, k])
    return d


def _inverse_from_lu(lu, perm):
    n = lu.shape[0]
    rhs = np.eye(n)[perm]
    y = np.empty((n, n))
    for i in range(n):
        s = rhs[i].copy()
        for k in range(i):
            s -= lu[i, k] * y[k]
        y[i] = s
    x = np.empty((n, n))
    for i in range(n - 1, -1, -1):
        s = y[i].copy()
        for k in range(i + 1, n):
            s -= lu[i, k] * x[k]
        x[i] = s / lu[i, i]
    return x


def _maxabs(a):
    return float(np.max(np.abs(a)))


def _passes(zero_col, min_pivot, maxabs, eps):
    return (not zero_col) and min_pivot > eps * max(1.0, maxabs)


def det(a):
    lu, _, sign, zero_col, _ = lu_factor(a)
    return _det_from_lu(lu, sign, zero_col)


def min_pivot(a):
    return lu_factor(a)[4]


def is_invertible(a, eps):
    _, _, _, zero_col, mp = lu_factor(a)
    return _passes(zero_col, mp, _maxabs(a), eps)


def inverse(a):
    lu, perm, _, _, _ = lu_factor(a)
    return _inverse_from_lu(lu, perm)


def cofactor_adjugate(a):
    n = a.shape[0]
    if n == 1:
        return np.ones((1, 1))
    out = np.empty((n, n))
    for i in range(n):
        rows = np.delete(a, i, axis=0)
        for j in range(n):
            c = det(np.ascontiguousarray(np.delete(rows, j, axis=1)))
            out[j, i] = -c if (i + j) & 1 else c
    return out


def adjugate(a, eps):
    n = a.shape[0]
    if n == 1:
        return np.ones((1, 1))
    lu, perm, sign, zero_col, mp = lu_factor(a)
    if _passes(zero_col, mp, _maxabs(a), eps):
        d = _det_from_lu(lu, sign, zero_col)
        return d * _inverse_from_lu(lu, perm)
    return cofactor_adjugate(a)


def matmul(a, b):
    out = np.zeros((a.shape[0], b.shape[1]))
    for k in range(a.shape[1]):
        out += np.outer(a[:, k], b[k, :])
    return out


def trace(a):
    s = 0.0
    for i in range(a.shape[0]):
        s += float(a[i, i])
    return s


def trace_of_product(a, b):
    """``trace(matmul(a, b))`` without forming the off-diagonal entries."""
    diag = np.zeros(a.shape[0])
    for k in range(a.shape[1]):
        diag += a[:, k] * b[k, :]
    s = 0.0
    for v in diag:
        s += float(v)
    return s


def sylvester_rhs(a, b, f, x):
    """``F - A X - X B``."""
    return (f - matmul(a, x)) - matmul(x, b)


def replaced_det_sum(x, f, axis):
    """Sum over j of det(x with its j-th row (axis 0) or column (axis 1) taken from f)."""
    s = 0.0
    for j in range(x.shape[0]):
        y = x.copy()
        if axis == 0:
            y[j, :] = f[j, :]
        else:
            y[:, j] = f[:, j]
        s += det(y)
    return s


def coupled_rhs(a, b, f, x, d, eps):
    """Right-hand sides of the X, determinant and trace-integral channels."""
    dx = sylvester_rhs(a, b, f, x)
    tr_ab = trace(a + b)
    dd = trace_of_product(adjugate(x, eps), f) - tr_ab * d
    return dx, dd, tr_ab


@_quiet
def rk4_run(x0, d0, a_nodes, b_nodes, f_nodes, h, eps):
    """Classic RK4 over ``N = (len(a_nodes) - 1) // 2`` steps of size ``h``.

    ``*_nodes[j]`` holds the coefficient value at ``t0 + j*h/2``.  Returns
    ``(xs, ds, cs, fail)`` where ``fail`` is the index of the first sample with
    a non-finite X entry, or -1.
    """
    steps = (a_nodes.shape[0] - 1) // 2
    n = x0.shape[0]
    xs = np.zeros((steps + 1, n, n))
    ds = np.zeros(steps + 1)
    cs = np.zeros(steps + 1)
    y = np.array(x0, dtype=np.float64)
    d = float(d0)
    c = 0.0
    xs[0] = y
    ds[0] = d
    hh = 0.5 * h
    h6 = h / 6.0
    for k in range(steps):
        j = 2 * k
        k1x, k1d, t1 = coupled_rhs(a_nodes[j], b_nodes[j], f_nodes[j], y, d, eps)
        k2x, k2d, t2 = coupled_rhs(a_nodes[j + 1], b_nodes[j + 1], f_nodes[j + 1],
                                   y + hh * k1x, d + hh * k1d, eps)
        k3x, k3d, t3 = coupled_rhs(a_nodes[j + 1], b_nodes[j + 1], f_nodes[j + 1],
                                   y + hh * k2x, d + hh * k2d, eps)
        k4x, k4d, t4 = coupled_rhs(a_nodes[j + 2], b_nodes[j + 2], f_nodes[j + 2],
                                   y + h * k3x, d + h * k3d, eps)
        y = y + h6 * (((k1x + 2.0 * k2x) + 2.0 * k3x) + k4x)
        d = d + h6 * (((k1d + 2.0 * k2d) + 2.0 * k3d) + k4d)
        c = c + h6 * (((t1 + 2.0 * t2) + 2.0 * t3) + t4)
        xs[k + 1] = y
        ds[k + 1] = d
        cs[k + 1] = c
        if not np.all(np.isfinite(y)):
            return xs, ds, cs, k + 1
    return xs, ds, cs, -1


@_quiet
def batch_det(xs):
    return np.array([det(x) for x in xs], dtype=np.float64)


@_quiet
def batch_trace_adj_prod(xs, fs, eps):
    return np.array([trace_of_product(adjugate(x, eps), f) for x, f in zip(xs, fs)],
                    dtype=np.float64)


@_quiet
def batch_replaced_det_sum(xs, fs, axis):
    return np.array([replaced_det_sum(x, f, axis) for x, f in zip(xs, fs)],
                    dtype=np.float64)


@_quiet
def batch_trace_inv_prod(xs, fs, eps):
    """``trace(inv(X_k) F_k)`` where X_k passes the invertibility test, NaN elsewhere."""
    m = xs.shape[0]
    values = np.full(m, np.nan)
    ok = np.zeros(m, dtype=bool)
    for k in range(m):
        lu, perm, _, zero_col, mp = lu_factor(xs[k])
        if _passes(zero_col, mp, _maxabs(xs[k]), eps):
            values[k] = trace_of_product(_inverse_from_lu(lu, perm), fs[k])
            ok[k] = True
    return values, ok
