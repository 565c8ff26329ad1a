"""CSV time series and summary block for a run."""
import io
import math

import numpy as np

from detflow.identity import relative_drift

HEADER = ("t", "det_direct", "det_ode", "eq5", "eq6", "eq2", "eq4", "drift_eq5", "drift_eq6")
OVERFLOW = "overflow"


def fmt(x):
    """Shortest round-trip decimal; empty for a missing value."""
    if x is None:
        return ""
    return repr(float(x))


def _column(series, k):
    if series is None or not series.valid[k] and not series.overflow[k]:
        return ""
    if series.overflow[k]:
        return OVERFLOW
    return fmt(series.values[k])


def _drift_column(drift, k):
    v = drift[k]
    return "" if not math.isfinite(v) else fmt(v)


def render_csv(s, traj, series, report):
    """Render the CSV document (header, one row per grid point, ``# key=value`` summary)."""
    buf = io.StringIO(newline="")
    buf.write(",".join(HEADER) + "\n")
    dd = traj.det_direct
    drift5 = relative_drift(series["eq5"].values, dd)
    eq6 = series.get("eq6")
    drift6 = relative_drift(eq6.values, dd) if eq6 is not None else np.full(len(traj), np.nan)
    for k in range(len(traj)):
        row = (fmt(traj.times[k]), fmt(dd[k]), fmt(traj.det_ode[k]),
               _column(series["eq5"], k), _column(eq6, k), _column(series.get("eq2"), k),
               _column(series.get("eq4"), k), _drift_column(drift5, k),
               _drift_column(drift6, k))
        buf.write(",".join(row) + "\n")
    for key, value in summary_items(s, traj, report):
        buf.write(f"# {key}={value}\n")
    return buf.getvalue()


def summary_items(s, traj, report):
    def opt(v):
        return "none" if v is None else fmt(v)

    items = [
        ("method", traj.method),
        ("grid_size", str(report.grid_size)),
        ("accepted_steps", str(traj.accepted)),
        ("rejected_steps", str(traj.rejected)),
        ("max_rel_drift_eq5", fmt(report.max_rel_drift_eq5)),
        ("max_rel_drift_eq6", opt(report.max_rel_drift_eq6)),
        ("eq6_inapplicable_from", opt(report.first_noninvertible_time)),
        ("max_rel_drift_detode", fmt(report.max_rel_drift_detode)),
        ("max_rel_drift_eq2", opt(report.max_rel_drift_eq2)),
        ("max_rel_drift_eq4", opt(report.max_rel_drift_eq4)),
    ]
    for key, value in report.terminal.items():
        items.append((f"terminal_{key}", value if isinstance(value, str) else opt(value)))
    for key, flag in report.overflow.items():
        items.append((f"overflow_{key}", "true" if flag else "false"))
    return items
