"""Closed-form determinant identities evaluated along a trajectory.

Four predictions of det X(t) are computed from the trajectory's grid:

* ``eq2_det``  homogeneous case (F = 0): det X0 * exp(-int tr(A + B)),
* ``eq4_det``  left-only case (B = 0), integrand D_{X,F} = sum of
  row-replaced determinants,
* ``eq5_det``  general case, integrand tr(adj(X) F) with the integrating
  factor exp(int tr(A + B)),
* ``eq6_det``  while X stays invertible: det X0 * exp(int tr(X^-1 F) - tr(A + B)).

Exponents live in log space.  The integrating-factor quadrature is carried
out on ``exp(-C(t_k)) * int p exp(C)`` directly, so only differences of the
exponent between neighbouring samples are ever exponentiated.  Values whose
magnitude would exceed ``exp(LOG_OVERFLOW)`` are reported through an overflow
mask instead of as infinities.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from detflow import _backend
from detflow.coeffs import eval_many
from detflow.errors import NotHomogeneous, NotLeftOnly, SingularStart
from detflow.linalg import EPS_INV, is_invertible

LOG_OVERFLOW = 700.0
QUADRATURES = ("trapezoid", "simpson", "auto")


@dataclass(frozen=True, eq=False)
class IdentitySeries:
    """Predicted determinant per grid point.

    ``values`` is NaN wherever ``valid`` is False: past the point where the
    identity stops applying, or where ``overflow`` is set.
    """

    name: str
    times: np.ndarray
    values: np.ndarray
    overflow: np.ndarray
    valid: np.ndarray
    first_noninvertible_time: float | None = None
    log_magnitude: np.ndarray | None = None

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class DriftReport:
    grid_size: int
    max_rel_drift_eq5: float
    max_rel_drift_eq6: float | None
    max_rel_drift_detode: float
    max_rel_drift_eq2: float | None
    max_rel_drift_eq4: float | None
    first_noninvertible_time: float | None
    terminal: dict = field(default_factory=dict)
    overflow: dict = field(default_factory=dict)

    @property
    def eq6_inapplicable_from(self):
        return self.first_noninvertible_time

    def max_drift(self):
        vals = [self.max_rel_drift_eq5, self.max_rel_drift_eq6, self.max_rel_drift_detode,
                self.max_rel_drift_eq2, self.max_rel_drift_eq4]
        return max(v for v in vals if v is not None)


def is_uniform(times, rtol=1e-9):
    dt = np.diff(times)
    return dt.size > 0 and bool(np.all(np.abs(dt - dt.mean()) <= rtol * dt.mean()))


def resolve_quadrature(method, times):
    if method not in QUADRATURES:
        raise ValueError(f"quadrature must be one of {QUADRATURES}, got {method!r}")
    if method == "auto":
        intervals = len(times) - 1
        return "simpson" if intervals >= 2 and intervals % 2 == 0 and is_uniform(times) \
            else "trapezoid"
    if method == "simpson" and not is_uniform(times):
        raise ValueError("simpson quadrature needs a uniform grid")
    return method


def scaled_cumulative_integral(times, p, c=None, method="trapezoid"):
    """S_k = exp(-c_k) * integral over [t_0, t_k] of p(s) exp(c(s)) ds.

    With ``c`` omitted this is the plain cumulative integral of ``p``.
    ``trapezoid`` is composite trapezoid.  ``simpson`` (uniform grids) is
    composite Simpson at even k; odd k add one interval integrated with the
    quadratic through the neighbouring three samples.
    """
    times = np.asarray(times, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    m = times.size
    if c is None:
        c = np.zeros(m)
    s = np.zeros(m)
    if method == "trapezoid" or m < 3:
        for k in range(1, m):
            e = math.exp(c[k - 1] - c[k])
            h = times[k] - times[k - 1]
            s[k] = e * s[k - 1] + 0.5 * h * (p[k - 1] * e + p[k])
        return s
    h = (times[-1] - times[0]) / (m - 1)
    for k in range(1, m):
        if k % 2 == 0:
            e2 = math.exp(c[k - 2] - c[k])
            e1 = math.exp(c[k - 1] - c[k])
            s[k] = e2 * s[k - 2] + h / 3.0 * (p[k - 2] * e2 + 4.0 * p[k - 1] * e1 + p[k])
        else:
            e0 = math.exp(c[k - 1] - c[k])
            if k + 1 < m:
                ef = math.exp(c[k + 1] - c[k])
                part = 5.0 * p[k - 1] * e0 + 8.0 * p[k] - p[k + 1] * ef
            else:
                eb = math.exp(c[k - 2] - c[k])
                part = -p[k - 2] * eb + 8.0 * p[k - 1] * e0 + 5.0 * p[k]
            s[k] = e0 * s[k - 1] + h / 12.0 * part
    return s


def _coeff_nodes(c, times):
    return np.ascontiguousarray(eval_many(c, times))


def _integrating_factor_series(name, s, traj, p, quadrature):
    """exp(-C_k) * (int p exp(C) + det X0) with C the cumulative trace integral."""
    method = resolve_quadrature(quadrature, traj.times)
    c = traj.cum_trace
    scaled = scaled_cumulative_integral(traj.times, p, c, method)
    d0 = traj.det_direct[0]
    values, overflow = _homogeneous_part(d0, c)
    values = scaled + values
    overflow |= ~np.isfinite(scaled) | (np.abs(scaled) > math.exp(LOG_OVERFLOW))
    return _series(name, traj, values, overflow)


def _homogeneous_part(d0, c):
    """det X0 * exp(-C_k), with overflow flagged from the log magnitude."""
    if d0 == 0.0:
        return np.zeros(c.size), np.zeros(c.size, dtype=bool)
    logmag = math.log(abs(d0)) - c
    overflow = logmag > LOG_OVERFLOW
    values = np.where(overflow, np.nan, d0 * np.exp(np.where(overflow, 0.0, -c)))
    return values, overflow


def _series(name, traj, values, overflow, valid=None, **extra):
    if valid is None:
        valid = np.ones(values.size, dtype=bool)
    valid = valid & ~overflow
    values = np.where(valid, values, np.nan)
    for arr in (values, overflow, valid):
        arr.flags.writeable = False
    return IdentitySeries(name, traj.times, values, overflow, valid, **extra)


def eq2_det(s, traj):
    """Homogeneous closed form det X0 * exp(-int tr(A + B))."""
    if not s.f.is_zero():
        raise NotHomogeneous("eq2 requires F identically zero")
    values, overflow = _homogeneous_part(traj.det_direct[0], traj.cum_trace)
    return _series("eq2", traj, values, overflow)


def eq5_det(s, traj, quadrature="trapezoid", eps=EPS_INV):
    """General two-sided identity with integrand tr(adj(X) F)."""
    f_n = _coeff_nodes(s.f, traj.times)
    p = _backend.kernels.batch_trace_adj_prod(np.ascontiguousarray(traj.x_samples), f_n, eps)
    return _integrating_factor_series("eq5", s, traj, p, quadrature)


def eq4_det(s, traj, quadrature="trapezoid"):
    """Left-only identity (B = 0) with integrand D_{X,F} from row-replaced determinants."""
    if not s.b.is_zero():
        raise NotLeftOnly("eq4 requires B identically zero")
    f_n = _coeff_nodes(s.f, traj.times)
    p = _backend.kernels.batch_replaced_det_sum(np.ascontiguousarray(traj.x_samples), f_n, 0)
    return _integrating_factor_series("eq4", s, traj, p, quadrature)


def eq6_det(s, traj, quadrature="trapezoid", eps=EPS_INV):
    """det X0 * exp(int tr(X^-1 F) - tr(A + B)) while X stays invertible.

    The series stops at the first sample where X fails ``is_invertible`` or
    where det X has changed sign relative to det X0 (a zero was crossed
    between samples); that sample's time is ``first_noninvertible_time``.
    """
    x0 = traj.x_samples[0]
    if not is_invertible(x0, eps):
        raise SingularStart("eq6 requires an invertible X0")
    d0 = traj.det_direct[0]
    f_n = _coeff_nodes(s.f, traj.times)
    tr_inv, ok = _backend.kernels.batch_trace_inv_prod(np.ascontiguousarray(traj.x_samples),
                                                       f_n, eps)
    ok &= np.sign(traj.det_direct) == math.copysign(1.0, d0)
    bad = np.flatnonzero(~ok)
    stop = int(bad[0]) if bad.size else len(traj)
    first_bad = float(traj.times[stop]) if bad.size else None

    m = len(traj)
    log_mag = np.full(m, np.nan)
    if stop > 0:
        times = traj.times[:stop]
        method = resolve_quadrature(quadrature, times) if stop > 1 else "trapezoid"
        integral = scaled_cumulative_integral(times, tr_inv[:stop], None, method)
        log_mag[:stop] = math.log(abs(d0)) + integral - traj.cum_trace[:stop]
    valid = np.zeros(m, dtype=bool)
    valid[:stop] = True
    overflow = valid & (log_mag > LOG_OVERFLOW)
    safe = np.where(valid & ~overflow, log_mag, 0.0)
    values = math.copysign(1.0, d0) * np.exp(safe)
    log_mag.flags.writeable = False
    return _series("eq6", traj, values, overflow, valid,
                   first_noninvertible_time=first_bad, log_magnitude=log_mag)


def relative_drift(series_values, det_direct):
    """|channel - det_direct| / max(1, |det_direct|), NaN where either side is missing."""
    with np.errstate(invalid="ignore"):
        d = np.abs(series_values - det_direct) / np.maximum(1.0, np.abs(det_direct))
    d[~np.isfinite(d)] = np.nan
    return d


def _max_or_zero(d):
    d = d[np.isfinite(d)]
    return float(d.max()) if d.size else 0.0


def all_series(s, traj, quadrature="trapezoid", eps=EPS_INV):
    """Every applicable identity series keyed by name; inapplicable ones map to None."""
    out = {"eq5": eq5_det(s, traj, quadrature, eps)}
    try:
        out["eq6"] = eq6_det(s, traj, quadrature, eps)
    except SingularStart:
        out["eq6"] = None
    out["eq2"] = eq2_det(s, traj) if s.f.is_zero() else None
    out["eq4"] = eq4_det(s, traj, quadrature) if s.b.is_zero() else None
    return out


def drift_report(s, traj, quadrature="trapezoid", eps=EPS_INV, series=None):
    """Max relative drift of every channel against det_direct, plus terminal values."""
    if series is None:
        series = all_series(s, traj, quadrature, eps)
    dd = traj.det_direct

    def drift(name):
        ser = series.get(name)
        return None if ser is None else _max_or_zero(relative_drift(ser.values, dd))

    eq6 = series.get("eq6")
    if eq6 is None:
        first_bad = float(traj.times[0])
    else:
        first_bad = eq6.first_noninvertible_time
    terminal = {"t": float(traj.times[-1]), "det_direct": float(dd[-1]),
                "det_ode": float(traj.det_ode[-1])}
    overflow = {}
    for name in ("eq5", "eq6", "eq2", "eq4"):
        ser = series.get(name)
        if ser is None or not (ser.valid[-1] or ser.overflow[-1]):
            terminal[name] = None
        else:
            terminal[name] = "overflow" if ser.overflow[-1] else float(ser.values[-1])
        if ser is not None:
            overflow[name] = bool(ser.overflow.any())
    return DriftReport(
        grid_size=len(traj),
        max_rel_drift_eq5=drift("eq5"),
        max_rel_drift_eq6=drift("eq6"),
        max_rel_drift_detode=_max_or_zero(relative_drift(traj.det_ode, dd)),
        max_rel_drift_eq2=drift("eq2"),
        max_rel_drift_eq4=drift("eq4"),
        first_noninvertible_time=first_bad,
        terminal=terminal,
        overflow=overflow,
    )
