"""Canonical and randomly generated scenarios.

The canonical ones have closed-form solutions and pin the analytic checks;
the random families feed the property suites.  All generators take a
``numpy.random.Generator`` so runs are reproducible from a seed.
"""
import numpy as np

from detflow.coeffs import CoefficientSpec, Scenario, SolverConfig

C = CoefficientSpec


def _rk4(h):
    return SolverConfig(method="rk4", h=h)


def nilpotent(h=1e-3):
    """A = B = 0, F = [[0,1],[0,0]], X0 = I: X(t) = [[1,t],[0,1]], det = 1."""
    return Scenario(2, 0.0, 2.0, np.eye(2), C.zero(2), C.zero(2),
                    C.constant([[0.0, 1.0], [0.0, 0.0]]), _rk4(h))


def scalar_decay(h=1e-3):
    """n = 1, a = 0.3, b = 0.7, f = 0, x0 = 2: x(t) = 2 exp(-t)."""
    return Scenario(1, 0.0, 1.0, np.array([[2.0]]), C.constant([[0.3]]), C.constant([[0.7]]),
                    C.zero(1), _rk4(h))


def diagonal(t_end=0.2, h=1e-3):
    """A = diag(1,2), B = diag(3,4), F = 0, X0 = I: X_ij(t) = exp(-(a_i + b_j) t)."""
    return Scenario(2, 0.0, t_end, np.eye(2), C.constant(np.diag([1.0, 2.0])),
                    C.constant(np.diag([3.0, 4.0])), C.zero(2), _rk4(h))


def diagonal_exact(t):
    """X(t) = exp(-A t) X0 exp(-B t) for the ``diagonal`` scenario."""
    return np.diag(np.exp(-np.array([4.0, 6.0]) * t))


def sign_crossing(t_end=2.0, h=1e-3):
    """n = 1, a = b = 0, f = 1, x0 = -1: x(t) = t - 1, vanishing at t = 1."""
    return Scenario(1, 0.0, t_end, np.array([[-1.0]]), C.zero(1), C.zero(1),
                    C.constant([[1.0]]), _rk4(h))


def blowup(n=2, t_end=20.0, h=1e-3):
    """A = B = -10 I, F = 0: X = exp(20 t) I and det X = exp(20 n t) overflows."""
    m = -10.0 * np.eye(n)
    return Scenario(n, 0.0, t_end, np.eye(n), C.constant(m), C.constant(m), C.zero(n), _rk4(h))


def random_matrix(rng, n, scale=1.0):
    return rng.uniform(-scale, scale, size=(n, n))


def random_sinusoidal(rng, n, scale):
    return C.sinusoidal(random_matrix(rng, n, scale), random_matrix(rng, n, scale),
                        rng.uniform(0.5, 3.0), rng.uniform(0.0, 2 * np.pi))


def random_polynomial(rng, n, scale, degree=2):
    return C.polynomial([random_matrix(rng, n, scale) for _ in range(degree + 1)])


def random_smooth(rng, n=None, *, homogeneous=False, left_only=False, scale=0.3,
                  t_end=1.0, h=1e-3, seed=None):
    """Sinusoidal A, polynomial B and a polynomial or sinusoidal F."""
    if n is None:
        n = int(rng.integers(1, 6))
    a = random_sinusoidal(rng, n, scale)
    b = C.zero(n) if left_only else random_polynomial(rng, n, scale)
    if homogeneous:
        f = C.zero(n)
    elif rng.random() < 0.5:
        f = random_polynomial(rng, n, scale)
    else:
        f = random_sinusoidal(rng, n, scale)
    x0 = np.eye(n) + random_matrix(rng, n, 0.5)
    return Scenario(n, 0.0, t_end, x0, a, b, f, _rk4(h), seed)


def random_invertible(rng, n=None, *, t_end=0.5, h=1e-3, seed=None):
    """X0 = I, small forcing and a short horizon so X stays well away from singular."""
    if n is None:
        n = int(rng.integers(1, 6))
    a = random_sinusoidal(rng, n, 0.3)
    b = random_polynomial(rng, n, 0.3, degree=1)
    f = random_polynomial(rng, n, 0.1, degree=1)
    return Scenario(n, 0.0, t_end, np.eye(n), a, b, f, _rk4(h), seed)
