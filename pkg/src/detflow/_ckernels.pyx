# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels.

Operation-for-operation mirror of ``_pykernels``; see that module for the
contracts.  Built with ``-ffp-contract=off`` so no FMA is introduced.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, isfinite, INFINITY, NAN
from libc.stdlib cimport malloc, free
from libc.string cimport memcpy

cnp.import_array()

DET_ZERO = 1e-300
cdef double _DET_ZERO = 1e-300


cdef struct LUInfo:
    double sign
    int zero_col
    double min_pivot


cdef struct Work:
    Py_ssize_t n
    double* lu      # n*n
    double* minor   # (n-1)*(n-1), at least 1
    double* t1      # n*n
    double* t2      # n*n
    double* adj     # n*n
    double* col     # n
    double* y       # n
    Py_ssize_t* perm


cdef int _work_alloc(Work* w, Py_ssize_t n) except -1:
    cdef Py_ssize_t nn = n * n
    cdef Py_ssize_t mm = (n - 1) * (n - 1) if n > 1 else 1
    w.n = n
    w.lu = <double*> malloc(nn * sizeof(double))
    w.minor = <double*> malloc(mm * sizeof(double))
    w.t1 = <double*> malloc(nn * sizeof(double))
    w.t2 = <double*> malloc(nn * sizeof(double))
    w.adj = <double*> malloc(nn * sizeof(double))
    w.col = <double*> malloc(n * sizeof(double))
    w.y = <double*> malloc(n * sizeof(double))
    w.perm = <Py_ssize_t*> malloc(n * sizeof(Py_ssize_t))
    if (w.lu == NULL or w.minor == NULL or w.t1 == NULL or w.t2 == NULL
            or w.adj == NULL or w.col == NULL or w.y == NULL or w.perm == NULL):
        _work_free(w)
        raise MemoryError()
    return 0


cdef void _work_free(Work* w) noexcept:
    free(w.lu); free(w.minor); free(w.t1); free(w.t2)
    free(w.adj); free(w.col); free(w.y); free(w.perm)
    w.lu = NULL; w.minor = NULL; w.t1 = NULL; w.t2 = NULL
    w.adj = NULL; w.col = NULL; w.y = NULL; w.perm = NULL


cdef LUInfo _lu(double* a, Py_ssize_t n, Py_ssize_t* perm) noexcept nogil:
    cdef LUInfo info
    cdef Py_ssize_t i, j, k, p
    cdef Py_ssize_t ip
    cdef double big, v, l, tmp
    info.sign = 1.0
    info.zero_col = 0
    info.min_pivot = INFINITY
    for i in range(n):
        perm[i] = i
    for k in range(n):
        p = k
        big = fabs(a[k * n + k])
        for i in range(k + 1, n):
            v = fabs(a[i * n + k])
            if v > big:
                big = v
                p = i
        if p != k:
            for j in range(n):
                tmp = a[k * n + j]
                a[k * n + j] = a[p * n + j]
                a[p * n + j] = tmp
            ip = perm[k]
            perm[k] = perm[p]
            perm[p] = ip
            info.sign = -info.sign
        if big < info.min_pivot:
            info.min_pivot = big
        if big < _DET_ZERO:
            info.zero_col = 1
            continue
        for i in range(k + 1, n):
            l = a[i * n + k] / a[k * n + k]
            a[i * n + k] = l
            for j in range(k + 1, n):
                a[i * n + j] -= l * a[k * n + j]
    return info


cdef double _det_from_lu(double* lu, Py_ssize_t n, LUInfo info) noexcept nogil:
    cdef Py_ssize_t k
    cdef double d
    if info.zero_col:
        return 0.0
    d = info.sign
    for k in range(n):
        d *= lu[k * n + k]
    return d


cdef void _inverse_from_lu(double* lu, Py_ssize_t n, Py_ssize_t* perm,
                           double* out, double* y) noexcept nogil:
    cdef Py_ssize_t i, j, k
    cdef double s
    for j in range(n):
        for i in range(n):
            s = 1.0 if perm[i] == j else 0.0
            for k in range(i):
                s -= lu[i * n + k] * y[k]
            y[i] = s
        for i in range(n - 1, -1, -1):
            s = y[i]
            for k in range(i + 1, n):
                s -= lu[i * n + k] * out[k * n + j]
            out[i * n + j] = s / lu[i * n + i]


cdef double _maxabs(const double* a, Py_ssize_t nn) noexcept nogil:
    cdef Py_ssize_t i
    cdef double m = 0.0, v
    for i in range(nn):
        v = fabs(a[i])
        if v > m:
            m = v
    return m


cdef inline bint _passes(LUInfo info, double maxabs, double eps) noexcept nogil:
    cdef double scale = maxabs if maxabs > 1.0 else 1.0
    return (not info.zero_col) and info.min_pivot > eps * scale


cdef double _det(const double* a, Py_ssize_t n, double* lu, Py_ssize_t* perm) noexcept nogil:
    memcpy(lu, a, n * n * sizeof(double))
    return _det_from_lu(lu, n, _lu(lu, n, perm))


cdef void _cofactor_adjugate(const double* a, Py_ssize_t n, double* out,
                             double* minor, Py_ssize_t* perm) noexcept nogil:
    cdef Py_ssize_t i, j, r, c, rr, cc, m = n - 1
    cdef double v
    if n == 1:
        out[0] = 1.0
        return
    for i in range(n):
        for j in range(n):
            rr = 0
            for r in range(n):
                if r == i:
                    continue
                cc = 0
                for c in range(n):
                    if c == j:
                        continue
                    minor[rr * m + cc] = a[r * n + c]
                    cc += 1
                rr += 1
            v = _det_from_lu(minor, m, _lu(minor, m, perm))
            out[j * n + i] = -v if (i + j) & 1 else v


cdef void _adjugate(const double* a, Py_ssize_t n, double eps, double* out, Work* w) noexcept nogil:
    cdef LUInfo info
    cdef double d
    cdef Py_ssize_t i
    if n == 1:
        out[0] = 1.0
        return
    memcpy(w.lu, a, n * n * sizeof(double))
    info = _lu(w.lu, n, w.perm)
    if _passes(info, _maxabs(a, n * n), eps):
        d = _det_from_lu(w.lu, n, info)
        _inverse_from_lu(w.lu, n, w.perm, out, w.y)
        for i in range(n * n):
            out[i] = d * out[i]
    else:
        _cofactor_adjugate(a, n, out, w.minor, w.perm)


cdef void _matmul(const double* a, const double* b, double* out, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, j, k
    cdef double s
    for i in range(n):
        for j in range(n):
            s = 0.0
            for k in range(n):
                s += a[i * n + k] * b[k * n + j]
            out[i * n + j] = s


cdef double _trace(const double* a, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i
    cdef double s = 0.0
    for i in range(n):
        s += a[i * n + i]
    return s


cdef double _trace_of_product(const double* a, const double* b, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, k
    cdef double s = 0.0, di
    for i in range(n):
        di = 0.0
        for k in range(n):
            di += a[i * n + k] * b[k * n + i]
        s += di
    return s


cdef double _coupled(const double* A, const double* B, const double* F, const double* X, double d,
                     Py_ssize_t n, double eps, double* dX, double* tr_ab,
                     Work* w) noexcept nogil:
    cdef Py_ssize_t i, nn = n * n
    cdef double s = 0.0
    _matmul(A, X, w.t1, n)
    _matmul(X, B, w.t2, n)
    for i in range(nn):
        dX[i] = (F[i] - w.t1[i]) - w.t2[i]
    for i in range(n):
        s += A[i * n + i] + B[i * n + i]
    tr_ab[0] = s
    _adjugate(X, n, eps, w.adj, w)
    return _trace_of_product(w.adj, F, n) - s * d


# ---------------------------------------------------------------------------
# Python-facing wrappers

def lu_factor(const double[:, ::1] a):
    cdef Py_ssize_t n = a.shape[0]
    lu = np.array(a, dtype=np.float64, order="C")
    cdef double[:, ::1] luv = lu
    cdef Py_ssize_t* perm = <Py_ssize_t*> malloc(n * sizeof(Py_ssize_t))
    cdef LUInfo info
    try:
        info = _lu(&luv[0, 0], n, perm)
        p = np.array([perm[i] for i in range(n)], dtype=np.intp)
    finally:
        free(perm)
    return lu, p, info.sign, bool(info.zero_col), info.min_pivot


def det(const double[:, ::1] a):
    cdef Py_ssize_t n = a.shape[0]
    cdef Work w
    _work_alloc(&w, n)
    try:
        return _det(&a[0, 0], n, w.lu, w.perm)
    finally:
        _work_free(&w)


def min_pivot(const double[:, ::1] a):
    return lu_factor(a)[4]


def is_invertible(const double[:, ::1] a, double eps):
    cdef Py_ssize_t n = a.shape[0]
    cdef Work w
    cdef LUInfo info
    _work_alloc(&w, n)
    try:
        memcpy(w.lu, &a[0, 0], n * n * sizeof(double))
        info = _lu(w.lu, n, w.perm)
        return bool(_passes(info, _maxabs(&a[0, 0], n * n), eps))
    finally:
        _work_free(&w)


def inverse(const double[:, ::1] a):
    cdef Py_ssize_t n = a.shape[0]
    cdef Work w
    out = np.empty((n, n))
    cdef double[:, ::1] ov = out
    _work_alloc(&w, n)
    try:
        memcpy(w.lu, &a[0, 0], n * n * sizeof(double))
        _lu(w.lu, n, w.perm)
        _inverse_from_lu(w.lu, n, w.perm, &ov[0, 0], w.y)
    finally:
        _work_free(&w)
    return out


def cofactor_adjugate(const double[:, ::1] a):
    cdef Py_ssize_t n = a.shape[0]
    cdef Work w
    out = np.empty((n, n))
    cdef double[:, ::1] ov = out
    _work_alloc(&w, n)
    try:
        _cofactor_adjugate(&a[0, 0], n, &ov[0, 0], w.minor, w.perm)
    finally:
        _work_free(&w)
    return out


def adjugate(const double[:, ::1] a, double eps):
    cdef Py_ssize_t n = a.shape[0]
    cdef Work w
    out = np.empty((n, n))
    cdef double[:, ::1] ov = out
    _work_alloc(&w, n)
    try:
        _adjugate(&a[0, 0], n, eps, &ov[0, 0], &w)
    finally:
        _work_free(&w)
    return out


def matmul(const double[:, ::1] a, const double[:, ::1] b):
    cdef Py_ssize_t n = a.shape[0], m = b.shape[1], p = a.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double s
    out = np.empty((n, m))
    cdef double[:, ::1] ov = out
    for i in range(n):
        for j in range(m):
            s = 0.0
            for k in range(p):
                s += a[i, k] * b[k, j]
            ov[i, j] = s
    return out


def trace(const double[:, ::1] a):
    return _trace(&a[0, 0], a.shape[0])


def trace_of_product(const double[:, ::1] a, const double[:, ::1] b):
    return _trace_of_product(&a[0, 0], &b[0, 0], a.shape[0])


def sylvester_rhs(const double[:, ::1] a, const double[:, ::1] b, const double[:, ::1] f, const double[:, ::1] x):
    cdef Py_ssize_t n = a.shape[0], i
    cdef Work w
    out = np.empty((n, n))
    cdef double[:, ::1] ov = out
    _work_alloc(&w, n)
    try:
        _matmul(&a[0, 0], &x[0, 0], w.t1, n)
        _matmul(&x[0, 0], &b[0, 0], w.t2, n)
        for i in range(n * n):
            (&ov[0, 0])[i] = ((&f[0, 0])[i] - w.t1[i]) - w.t2[i]
    finally:
        _work_free(&w)
    return out


cdef double _replaced_det_sum(const double* x, const double* f, Py_ssize_t n, int axis,
                              double* y, Work* w) noexcept nogil:
    cdef Py_ssize_t j, i
    cdef double s = 0.0
    for j in range(n):
        memcpy(y, x, n * n * sizeof(double))
        if axis == 0:
            for i in range(n):
                y[j * n + i] = f[j * n + i]
        else:
            for i in range(n):
                y[i * n + j] = f[i * n + j]
        s += _det(y, n, w.lu, w.perm)
    return s


def replaced_det_sum(const double[:, ::1] x, const double[:, ::1] f, int axis):
    cdef Py_ssize_t n = x.shape[0]
    cdef Work w
    _work_alloc(&w, n)
    try:
        return _replaced_det_sum(&x[0, 0], &f[0, 0], n, axis, w.t1, &w)
    finally:
        _work_free(&w)


def coupled_rhs(const double[:, ::1] a, const double[:, ::1] b, const double[:, ::1] f,
                const double[:, ::1] x, double d, double eps):
    cdef Py_ssize_t n = a.shape[0]
    cdef Work w
    cdef double dd, tr_ab
    dx = np.empty((n, n))
    cdef double[:, ::1] dv = dx
    _work_alloc(&w, n)
    try:
        dd = _coupled(&a[0, 0], &b[0, 0], &f[0, 0], &x[0, 0], d, n, eps,
                      &dv[0, 0], &tr_ab, &w)
    finally:
        _work_free(&w)
    return dx, dd, tr_ab


def rk4_run(const double[:, ::1] x0, double d0, const double[:, :, ::1] a_nodes,
            const double[:, :, ::1] b_nodes, const double[:, :, ::1] f_nodes,
            double h, double eps):
    cdef Py_ssize_t steps = (a_nodes.shape[0] - 1) // 2
    cdef Py_ssize_t n = x0.shape[0], nn = n * n
    cdef Py_ssize_t k, j, i
    cdef Py_ssize_t fail = -1
    cdef double hh = 0.5 * h, h6 = h / 6.0
    cdef double d, c, k1d, k2d, k3d, k4d, t1, t2, t3, t4
    cdef Work w
    xs = np.zeros((steps + 1, n, n))
    ds = np.zeros(steps + 1)
    cs = np.zeros(steps + 1)
    cdef double[:, :, ::1] xv = xs
    cdef double[::1] dv = ds
    cdef double[::1] cv = cs
    cdef double* buf = <double*> malloc(6 * nn * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    cdef double* y = buf
    cdef double* st = buf + nn
    cdef double* k1 = buf + 2 * nn
    cdef double* k2 = buf + 3 * nn
    cdef double* k3 = buf + 4 * nn
    cdef double* k4 = buf + 5 * nn
    try:
        _work_alloc(&w, n)
    except MemoryError:
        free(buf)
        raise
    try:
        with nogil:
            memcpy(y, &x0[0, 0], nn * sizeof(double))
            memcpy(&xv[0, 0, 0], y, nn * sizeof(double))
            d = d0
            c = 0.0
            dv[0] = d
            cv[0] = c
            for k in range(steps):
                j = 2 * k
                k1d = _coupled(&a_nodes[j, 0, 0], &b_nodes[j, 0, 0], &f_nodes[j, 0, 0],
                               y, d, n, eps, k1, &t1, &w)
                for i in range(nn):
                    st[i] = y[i] + hh * k1[i]
                k2d = _coupled(&a_nodes[j + 1, 0, 0], &b_nodes[j + 1, 0, 0],
                               &f_nodes[j + 1, 0, 0], st, d + hh * k1d, n, eps, k2, &t2, &w)
                for i in range(nn):
                    st[i] = y[i] + hh * k2[i]
                k3d = _coupled(&a_nodes[j + 1, 0, 0], &b_nodes[j + 1, 0, 0],
                               &f_nodes[j + 1, 0, 0], st, d + hh * k2d, n, eps, k3, &t3, &w)
                for i in range(nn):
                    st[i] = y[i] + h * k3[i]
                k4d = _coupled(&a_nodes[j + 2, 0, 0], &b_nodes[j + 2, 0, 0],
                               &f_nodes[j + 2, 0, 0], st, d + h * k3d, n, eps, k4, &t4, &w)
                for i in range(nn):
                    y[i] = y[i] + h6 * (((k1[i] + 2.0 * k2[i]) + 2.0 * k3[i]) + k4[i])
                d = d + h6 * (((k1d + 2.0 * k2d) + 2.0 * k3d) + k4d)
                c = c + h6 * (((t1 + 2.0 * t2) + 2.0 * t3) + t4)
                memcpy(&xv[k + 1, 0, 0], y, nn * sizeof(double))
                dv[k + 1] = d
                cv[k + 1] = c
                for i in range(nn):
                    if not isfinite(y[i]):
                        fail = k + 1
                        break
                if fail >= 0:
                    break
    finally:
        _work_free(&w)
        free(buf)
    return xs, ds, cs, fail


def batch_det(const double[:, :, ::1] xs):
    cdef Py_ssize_t m = xs.shape[0], n = xs.shape[1], k
    cdef Work w
    out = np.empty(m)
    cdef double[::1] ov = out
    _work_alloc(&w, n)
    try:
        for k in range(m):
            ov[k] = _det(&xs[k, 0, 0], n, w.lu, w.perm)
    finally:
        _work_free(&w)
    return out


def batch_trace_adj_prod(const double[:, :, ::1] xs, const double[:, :, ::1] fs, double eps):
    cdef Py_ssize_t m = xs.shape[0], n = xs.shape[1], k
    cdef Work w
    out = np.empty(m)
    cdef double[::1] ov = out
    _work_alloc(&w, n)
    try:
        for k in range(m):
            _adjugate(&xs[k, 0, 0], n, eps, w.adj, &w)
            ov[k] = _trace_of_product(w.adj, &fs[k, 0, 0], n)
    finally:
        _work_free(&w)
    return out


def batch_replaced_det_sum(const double[:, :, ::1] xs, const double[:, :, ::1] fs, int axis):
    cdef Py_ssize_t m = xs.shape[0], n = xs.shape[1], k
    cdef Work w
    out = np.empty(m)
    cdef double[::1] ov = out
    _work_alloc(&w, n)
    try:
        for k in range(m):
            ov[k] = _replaced_det_sum(&xs[k, 0, 0], &fs[k, 0, 0], n, axis, w.t1, &w)
    finally:
        _work_free(&w)
    return out


def batch_trace_inv_prod(const double[:, :, ::1] xs, const double[:, :, ::1] fs, double eps):
    cdef Py_ssize_t m = xs.shape[0], n = xs.shape[1], k
    cdef Work w
    cdef LUInfo info
    values = np.full(m, np.nan)
    ok = np.zeros(m, dtype=bool)
    cdef double[::1] vv = values
    _work_alloc(&w, n)
    try:
        for k in range(m):
            memcpy(w.lu, &xs[k, 0, 0], n * n * sizeof(double))
            info = _lu(w.lu, n, w.perm)
            if _passes(info, _maxabs(&xs[k, 0, 0], n * n), eps):
                _inverse_from_lu(w.lu, n, w.perm, w.adj, w.y)
                vv[k] = _trace_of_product(w.adj, &fs[k, 0, 0], n)
                ok[k] = True
    finally:
        _work_free(&w)
    return values, ok
