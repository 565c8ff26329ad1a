"""Dense small-matrix arithmetic.

Matrices are plain ``numpy`` float64 arrays of shape ``(n, n)``.  Values
returned from this module are read-only, so they can be shared freely;
inputs are never modified.  The heavy lifting is done by the kernel backend
(compiled when available), which fixes the summation order of every
reduction so results are reproducible bit for bit.
"""
import numpy as np

from detflow import _backend
from detflow.errors import DimensionMismatch, NonFiniteMatrix, SingularMatrix

EPS_INV = 1e-12
DET_ZERO = 1e-300
MAX_DIM = 64

AXES = {"rows": 0, "columns": 1}


def as_matrix(value, n=None):
    """Validate ``value`` as a finite square matrix and return a read-only copy."""
    m = np.array(value, dtype=np.float64, order="C")
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise DimensionMismatch(f"expected a non-empty square matrix, got shape {m.shape}")
    if n is not None and m.shape[0] != n:
        raise DimensionMismatch(f"expected dimension {n}, got {m.shape[0]}")
    if not np.all(np.isfinite(m)):
        raise NonFiniteMatrix("matrix has NaN or Inf entries")
    m.flags.writeable = False
    return m


def _frozen(m):
    m.flags.writeable = False
    return m


def _c(m):
    return np.ascontiguousarray(m, dtype=np.float64)


def identity(n):
    return _frozen(np.eye(n))


def zeros(n):
    return _frozen(np.zeros((n, n)))


def max_norm(m):
    return float(np.max(np.abs(m)))


def trace(m):
    return _backend.kernels.trace(_c(m))


def det(m):
    """Determinant by partially pivoted LU.

    Returns exactly 0.0 when a pivot column is entirely below 1e-300 in
    magnitude.
    """
    return _backend.kernels.det(_c(m))


def is_invertible(m, eps=EPS_INV):
    """True iff every LU pivot exceeds ``eps * max(1, max_norm(m))``."""
    return bool(_backend.kernels.is_invertible(_c(m), eps))


def inverse(m, eps=EPS_INV):
    m = _c(m)
    if not _backend.kernels.is_invertible(m, eps):
        raise SingularMatrix("matrix fails the LU pivot invertibility test")
    return _frozen(_backend.kernels.inverse(m))


def adjugate(m, eps=EPS_INV):
    """Adjugate (transposed cofactor matrix).

    Uses ``det(m) * inverse(m)`` when ``m`` passes ``is_invertible`` and
    falls back to explicit cofactors otherwise, so singular input is fine.
    """
    return _frozen(_backend.kernels.adjugate(_c(m), eps))


def cofactor_adjugate(m):
    """Adjugate from explicit signed (n-1)x(n-1) minors, regardless of conditioning."""
    return _frozen(_backend.kernels.cofactor_adjugate(_c(m)))


def replaced_det_sum(x, f, axis="rows"):
    """Sum over j of det(x with its j-th row/column replaced by that of f).

    Equal to ``trace(adjugate(x) @ f)`` for either axis.
    """
    _check_same(x, f)
    try:
        ax = AXES[axis]
    except KeyError:
        raise ValueError(f"axis must be 'rows' or 'columns', got {axis!r}") from None
    return _backend.kernels.replaced_det_sum(_c(x), _c(f), ax)


def trace_of_product(a, b):
    """``trace(a @ b)`` with the same summation order as ``trace(mat_mul(a, b))``."""
    _check_same(a, b)
    return _backend.kernels.trace_of_product(_c(a), _c(b))


def _check_same(a, b):
    if np.shape(a) != np.shape(b):
        raise DimensionMismatch(f"shapes {np.shape(a)} and {np.shape(b)} differ")


def mat_add(a, b):
    _check_same(a, b)
    return _frozen(np.add(a, b))


def mat_sub(a, b):
    _check_same(a, b)
    return _frozen(np.subtract(a, b))


def mat_mul(a, b):
    if np.ndim(a) != 2 or np.ndim(b) != 2 or np.shape(a)[1] != np.shape(b)[0]:
        raise DimensionMismatch(f"cannot multiply {np.shape(a)} by {np.shape(b)}")
    return _frozen(_backend.kernels.matmul(_c(a), _c(b)))


def mat_scale(lam, a):
    return _frozen(float(lam) * np.asarray(a, dtype=np.float64))
