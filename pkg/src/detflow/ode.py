"""Integration of dX/dt = F - A X - X B with coupled determinant channels.

The state carries the n*n entries of X plus two scalars: ``d``, which follows
the scalar equation d' = tr(adj(X) F) - tr(A + B) d, and the running
integral of tr(A + B).  Both scalars use the same Runge-Kutta stages as X.
"""
from dataclasses import dataclass
import math

import numpy as np

from detflow import _backend
from detflow.coeffs import eval_many, validate
from detflow.errors import NonFiniteState, StepSizeUnderflow
from detflow.linalg import EPS_INV, as_matrix, det

# Fehlberg 4(5); the 4th-order solution is propagated
RKF_C = (0.0, 1 / 4, 3 / 8, 12 / 13, 1.0, 1 / 2)
RKF_A = (
    (),
    (1 / 4,),
    (3 / 32, 9 / 32),
    (1932 / 2197, -7200 / 2197, 7296 / 2197),
    (439 / 216, -8.0, 3680 / 513, -845 / 4104),
    (-8 / 27, 2.0, -3544 / 2565, 1859 / 4104, -11 / 40),
)
RKF_B4 = (25 / 216, 0.0, 1408 / 2565, 2197 / 4104, -1 / 5, 0.0)
RKF_B5 = (16 / 135, 0.0, 6656 / 12825, 28561 / 56430, -9 / 50, 2 / 55)

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0
UNDERFLOW = 1e-14


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    x_samples: np.ndarray
    det_direct: np.ndarray
    det_ode: np.ndarray
    cum_trace: np.ndarray
    accepted: int
    rejected: int
    method: str

    def __post_init__(self):
        for name in ("times", "x_samples", "det_direct", "det_ode", "cum_trace"):
            getattr(self, name).flags.writeable = False

    def __len__(self):
        return self.times.size

    @property
    def step_stats(self):
        return {"accepted": self.accepted, "rejected": self.rejected}

    def is_uniform(self, rtol=1e-9):
        dt = np.diff(self.times)
        return bool(np.all(np.abs(dt - dt.mean()) <= rtol * dt.mean()))


def fixed_step_count(span, h):
    """Number of uniform RK4 steps: ceil(span / h), ignoring last-bit rounding of the ratio."""
    ratio = span / h
    return max(1, math.ceil(ratio * (1.0 - 1e-12)))


def rhs(t, x, s):
    """dX/dt = F(t) - A(t) X - X B(t)."""
    a, b, f = (eval_many(c, [t])[0] for c in (s.a, s.b, s.f))
    return _backend.kernels.sylvester_rhs(a, b, f, np.ascontiguousarray(x, dtype=np.float64))


def det_rhs(t, x, d, s, eps=EPS_INV):
    """Right-hand side of the determinant channel: tr(adj(X) F) - tr(A + B) d.

    The adjugate comes from the evolving ``x``; ``d`` is the separately
    integrated determinant estimate.
    """
    a, b, f = (eval_many(c, [t])[0] for c in (s.a, s.b, s.f))
    _, dd, _ = _backend.kernels.coupled_rhs(a, b, f, np.ascontiguousarray(x, dtype=np.float64),
                                             float(d), eps)
    return dd


def integrate(s, eps=EPS_INV):
    """Integrate the scenario from t0 to t_end and return a Trajectory."""
    validate(s)
    x0 = as_matrix(s.x0, s.n)
    if s.solver.method == "rk4":
        return _integrate_rk4(s, x0, eps)
    return _integrate_rkf45(s, x0, eps)


def _integrate_rk4(s, x0, eps):
    span = s.t_end - s.t0
    steps = fixed_step_count(span, s.solver.h)
    nodes = s.t0 + span * (np.arange(2 * steps + 1) / (2 * steps))
    nodes[-1] = s.t_end
    a_n, b_n, f_n = (np.ascontiguousarray(eval_many(c, nodes)) for c in (s.a, s.b, s.f))
    d0 = det(x0)
    xs, ds, cs, fail = _backend.kernels.rk4_run(np.ascontiguousarray(x0), d0, a_n, b_n, f_n,
                                                span / steps, eps)
    times = nodes[::2].copy()
    if fail >= 0:
        raise NonFiniteState(f"X became non-finite at t={times[fail]!r}")
    return _finish(times, xs, ds, cs, steps, 0, "rk4", d0)


def _finish(times, xs, ds, cs, accepted, rejected, method, d0):
    det_direct = _backend.kernels.batch_det(np.ascontiguousarray(xs))
    det_direct[0] = d0
    ds[0] = d0
    cs[0] = 0.0
    return Trajectory(times, xs, det_direct, ds, cs, accepted, rejected, method)


def _integrate_rkf45(s, x0, eps):
    k = _backend.kernels
    n = s.n
    span = s.t_end - s.t0
    tol = s.solver.tol
    h = min(max(span / 100.0, 1e-12), span)
    h_min = UNDERFLOW * span

    def stage(t, y):
        a, b, f = (np.ascontiguousarray(eval_many(c, [t])[0]) for c in (s.a, s.b, s.f))
        x = np.ascontiguousarray(y[:-2].reshape(n, n))
        dx, dd, tr_ab = k.coupled_rhs(a, b, f, x, float(y[-2]), eps)
        return np.concatenate([dx.ravel(), [dd, tr_ab]])

    d0 = det(x0)
    t = s.t0
    y = np.concatenate([x0.ravel(), [d0, 0.0]])
    times, states = [t], [y]
    accepted = rejected = 0
    while t < s.t_end:
        last = t + h >= s.t_end - 1e-12 * span
        if last:
            h = s.t_end - t
        ks = []
        for i in range(6):
            yi = y.copy()
            for j, aij in enumerate(RKF_A[i]):
                yi = yi + (h * aij) * ks[j]
            ks.append(stage(t + RKF_C[i] * h, yi))
        incr4 = sum(b * kk for b, kk in zip(RKF_B4, ks))
        incr5 = sum(b * kk for b, kk in zip(RKF_B5, ks))
        err = h * float(np.max(np.abs(incr5 - incr4)))
        if not math.isfinite(err):
            err = math.inf
        if err <= tol:
            y = y + h * incr4
            t = s.t_end if last else t + h
            if not np.all(np.isfinite(y[:-2])):
                raise NonFiniteState(f"X became non-finite at t={t!r}")
            times.append(t)
            states.append(y)
            accepted += 1
        else:
            rejected += 1
        factor = MAX_FACTOR if err == 0 else SAFETY * (tol / err) ** 0.2
        h = h * min(MAX_FACTOR, max(MIN_FACTOR, factor))
        if h < h_min and t < s.t_end:
            raise StepSizeUnderflow(f"adaptive step {h!r} below {h_min!r} at t={t!r}")
    ys = np.array(states)
    xs = np.ascontiguousarray(ys[:, :-2].reshape(-1, n, n))
    return _finish(np.array(times), xs, ys[:, -2].copy(), ys[:, -1].copy(),
                   accepted, rejected, "rkf45", d0)


def _central_difference(times, values):
    """Second-order derivative estimate at interior points of a possibly nonuniform grid."""
    h1 = np.diff(times)[:-1]
    h2 = np.diff(times)[1:]
    shape = (-1,) + (1,) * (values.ndim - 1)
    h1 = h1.reshape(shape)
    h2 = h2.reshape(shape)
    return (h1 * h1 * values[2:] - h2 * h2 * values[:-2] + (h2 * h2 - h1 * h1) * values[1:-1]) \
        / (h1 * h2 * (h1 + h2))


def operator_residual(traj, s):
    """Max over interior samples of |dX/dt + A X + X B - F|, dX/dt by central difference."""
    if len(traj) < 3:
        raise ValueError("operator residual needs at least 3 samples")
    t = traj.times[1:-1]
    dx = _central_difference(traj.times, traj.x_samples)
    a_n, b_n, f_n = (eval_many(c, t) for c in (s.a, s.b, s.f))
    worst = 0.0
    for i in range(t.size):
        r = _backend.kernels.sylvester_rhs(a_n[i], b_n[i], f_n[i],
                                           np.ascontiguousarray(traj.x_samples[i + 1]))
        worst = max(worst, float(np.max(np.abs(dx[i] - r))))
    return worst


def det_derivative_defect(traj, s, eps=EPS_INV):
    """Relative gap between d/dt det X (central difference) and tr(adj(X) dX/dt).

    Returns the max over interior samples of |fd - tr| / max(1, |tr|).
    """
    if len(traj) < 3:
        raise ValueError("derivative check needs at least 3 samples")
    k = _backend.kernels
    t = traj.times[1:-1]
    fd = _central_difference(traj.times, traj.det_direct)
    a_n, b_n, f_n = (eval_many(c, t) for c in (s.a, s.b, s.f))
    worst = 0.0
    for i in range(t.size):
        x = np.ascontiguousarray(traj.x_samples[i + 1])
        dx = k.sylvester_rhs(a_n[i], b_n[i], f_n[i], x)
        jac = k.trace_of_product(k.adjugate(x, eps), dx)
        worst = max(worst, abs(fd[i] - jac) / max(1.0, abs(jac)))
    return worst
