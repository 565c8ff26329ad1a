"""Independent reference implementations used only by the tests.

Nothing here calls into detflow's LU kernels.
"""
import math

import numpy as np


def laplace_det(m):
    """O(n!) cofactor expansion along the first row."""
    m = [list(map(float, row)) for row in np.asarray(m)]
    return _laplace(m)


def _laplace(m):
    n = len(m)
    if n == 1:
        return m[0][0]
    if n == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    total = 0.0
    for j in range(n):
        if m[0][j] == 0.0:
            continue
        minor = [row[:j] + row[j + 1:] for row in m[1:]]
        total += (-1) ** j * m[0][j] * _laplace(minor)
    return total


def cofactor_adjugate(m):
    """Transpose of the cofactor matrix, each minor by Laplace expansion."""
    m = np.asarray(m, dtype=float)
    n = m.shape[0]
    if n == 1:
        return np.ones((1, 1))
    out = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            minor = np.delete(np.delete(m, i, 0), j, 1)
            out[j, i] = (-1) ** (i + j) * laplace_det(minor)
    return out


def doolittle_pivots(m):
    """Pivot magnitudes of partially pivoted Gaussian elimination in plain Python."""
    a = [list(map(float, row)) for row in np.asarray(m)]
    n = len(a)
    pivots = []
    for k in range(n):
        p = max(range(k, n), key=lambda i: abs(a[i][k]))
        a[k], a[p] = a[p], a[k]
        pivots.append(abs(a[k][k]))
        if a[k][k] == 0.0:
            continue
        for i in range(k + 1, n):
            l = a[i][k] / a[k][k]
            for j in range(k, n):
                a[i][j] -= l * a[k][j]
    return pivots


def trapezoid_cumulative(t, g):
    """Plain composite trapezoid, cumulative."""
    out = [0.0]
    for k in range(1, len(t)):
        out.append(out[-1] + 0.5 * (t[k] - t[k - 1]) * (g[k] + g[k - 1]))
    return np.array(out)


def simpson(t, g):
    """Composite Simpson on a uniform grid with an even number of intervals."""
    m = len(t) - 1
    assert m % 2 == 0
    h = (t[-1] - t[0]) / m
    return h / 3 * (g[0] + g[-1] + 4 * sum(g[1:-1:2]) + 2 * sum(g[2:-1:2]))


def finite_difference_order(errors):
    return [math.log2(errors[i] / errors[i + 1]) for i in range(len(errors) - 1)]
