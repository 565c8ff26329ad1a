"""Time-varying coefficients A(t), B(t), F(t) and the initial-value problem."""
from dataclasses import dataclass, field
import math

import numpy as np

from detflow.errors import OutOfRange, ValidationError
from detflow.linalg import MAX_DIM

KINDS = ("zero", "constant", "polynomial", "sinusoidal", "tabulated")
METHODS = ("rk4", "rkf45")


def _frozen_stack(mats):
    arr = np.array(mats, dtype=np.float64)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class CoefficientSpec:
    """A matrix-valued function of time.

    ``mats`` stacks the payload matrices: one for ``constant``, the
    coefficients ``C_0 .. C_d`` of ``sum C_k t**k`` for ``polynomial``,
    ``(M0, M1)`` of ``M0 + M1 sin(omega t + phi)`` for ``sinusoidal`` and one
    matrix per knot for ``tabulated`` (linear interpolation between knots).
    Build instances through the classmethods.
    """

    kind: str
    n: int
    mats: np.ndarray
    omega: float = 0.0
    phi: float = 0.0
    knots: np.ndarray = field(default_factory=lambda: np.empty(0))

    @classmethod
    def zero(cls, n):
        return cls("zero", n, _frozen_stack(np.zeros((0, n, n))))

    @classmethod
    def constant(cls, value):
        m = np.asarray(value, dtype=np.float64)
        return cls("constant", m.shape[0], _frozen_stack([m]))

    @classmethod
    def polynomial(cls, coeffs):
        c = _frozen_stack(coeffs)
        if c.ndim != 3 or c.shape[0] < 1:
            raise ValueError("polynomial needs at least one coefficient matrix")
        return cls("polynomial", c.shape[1], c)

    @classmethod
    def sinusoidal(cls, m0, m1, omega, phi=0.0):
        return cls("sinusoidal", np.shape(m0)[0], _frozen_stack([m0, m1]),
                   omega=float(omega), phi=float(phi))

    @classmethod
    def tabulated(cls, times, values):
        t = np.array(times, dtype=np.float64)
        t.flags.writeable = False
        v = _frozen_stack(values)
        return cls("tabulated", v.shape[1] if v.ndim == 3 else 0, v, knots=t)

    def is_zero(self):
        """True when the function vanishes identically (any kind)."""
        if self.kind == "zero":
            return True
        if self.kind == "sinusoidal":
            return not np.any(self.mats[0]) and (not np.any(self.mats[1]) or self.omega == 0.0
                                                  and math.sin(self.phi) == 0.0)
        return not np.any(self.mats)

    def problems(self, n, t0=None, t_end=None):
        """List of invariant violations, empty if none."""
        out = []
        if self.kind not in KINDS:
            return [f"unknown kind {self.kind!r}"]
        if self.mats.ndim != 3 or self.mats.shape[1:] != (n, n):
            out.append(f"dimension mismatch: payload matrices must be {n}x{n}")
        elif not np.all(np.isfinite(self.mats)):
            out.append("payload has NaN or Inf entries")
        if self.kind == "sinusoidal" and not (math.isfinite(self.omega)
                                              and math.isfinite(self.phi)):
            out.append("omega and phi must be finite")
        if self.kind == "tabulated":
            k = self.knots
            if k.ndim != 1 or k.size < 2:
                out.append("tabulated needs at least 2 knots")
            elif self.mats.shape[0] != k.size:
                out.append("tabulated needs one matrix per knot")
            elif not np.all(np.isfinite(k)) or not np.all(np.diff(k) > 0):
                out.append("tabulated knots must be finite and strictly increasing")
            elif t0 is not None and t_end is not None and (k[0] > t0 or k[-1] < t_end):
                out.append(f"tabulated knots [{k[0]}, {k[-1]}] do not cover [{t0}, {t_end}]")
        return out

    def __call__(self, t):
        return eval_coeff(self, t)


def eval_many(c, ts):
    """Evaluate ``c`` at every time in ``ts``; returns shape ``(len(ts), n, n)``."""
    ts = np.asarray(ts, dtype=np.float64).reshape(-1)
    tt = ts[:, None, None]
    if c.kind == "zero":
        return np.zeros((ts.size, c.n, c.n))
    if c.kind == "constant":
        return np.broadcast_to(c.mats[0], (ts.size, c.n, c.n)).copy()
    if c.kind == "polynomial":
        # Horner, highest degree first
        acc = np.broadcast_to(c.mats[-1], (ts.size, c.n, c.n)).copy()
        for coef in c.mats[-2::-1]:
            acc = acc * tt + coef
        return acc
    if c.kind == "sinusoidal":
        s = np.sin(c.omega * ts + c.phi)[:, None, None]
        return c.mats[0] + c.mats[1] * s
    if c.kind == "tabulated":
        k = c.knots
        if np.any(ts < k[0]) or np.any(ts > k[-1]):
            raise OutOfRange(f"time outside tabulated range [{k[0]}, {k[-1]}]")
        i = np.clip(np.searchsorted(k, ts, side="right") - 1, 0, k.size - 2)
        w = ((ts - k[i]) / (k[i + 1] - k[i]))[:, None, None]
        # (1-w)*lo + w*hi is exact at both ends of the interval
        return (1.0 - w) * c.mats[i] + w * c.mats[i + 1]
    raise ValueError(f"unknown kind {c.kind!r}")


def eval_coeff(c, t):
    """Matrix value of ``c`` at time ``t``."""
    return eval_many(c, [float(t)])[0]


@dataclass(frozen=True)
class SolverConfig:
    method: str = "rk4"
    h: float = 1e-3
    tol: float = 1e-10


@dataclass(frozen=True, eq=False)
class Scenario:
    """Initial-value problem dX/dt + A X + X B = F, X(t0) = x0, on [t0, t_end]."""

    n: int
    t0: float
    t_end: float
    x0: np.ndarray
    a: CoefficientSpec
    b: CoefficientSpec
    f: CoefficientSpec
    solver: SolverConfig = field(default_factory=SolverConfig)
    seed: int | None = None

    def with_solver(self, **changes):
        from dataclasses import replace
        return replace(self, solver=replace(self.solver, **changes))


def validate(s):
    """Check every Scenario invariant; raise ValidationError listing all violations."""
    errors = []
    if not isinstance(s.n, (int, np.integer)) or isinstance(s.n, bool) or not 1 <= s.n <= MAX_DIM:
        errors.append(f"n: must be an integer in [1, {MAX_DIM}], got {s.n!r}")
        n_ok = False
    else:
        n_ok = True
    if not (math.isfinite(s.t0) and math.isfinite(s.t_end)):
        errors.append("t0/t_end: must be finite")
    elif not s.t_end > s.t0:
        errors.append("t_end: empty interval (t_end must exceed t0)")
    x0 = np.asarray(s.x0, dtype=np.float64)
    if x0.ndim != 2 or x0.shape[0] != x0.shape[1] or (n_ok and x0.shape[0] != s.n):
        errors.append(f"x0: dimension mismatch (shape {x0.shape}, n = {s.n})")
    elif not np.all(np.isfinite(x0)):
        errors.append("x0: has NaN or Inf entries")
    if n_ok:
        for name in ("a", "b", "f"):
            c = getattr(s, name)
            if not isinstance(c, CoefficientSpec):
                errors.append(f"{name}: not a CoefficientSpec")
                continue
            errors.extend(f"{name}: {p}" for p in c.problems(s.n, s.t0, s.t_end))
    sv = s.solver
    if sv.method not in METHODS:
        errors.append(f"solver.method: must be one of {METHODS}, got {sv.method!r}")
    elif sv.method == "rk4" and not (math.isfinite(sv.h) and sv.h > 0):
        errors.append("solver.h: must be a positive finite step")
    elif sv.method == "rkf45" and not (math.isfinite(sv.tol) and sv.tol > 0):
        errors.append("solver.tol: must be a positive finite tolerance")
    if errors:
        raise ValidationError(errors)
    return s
