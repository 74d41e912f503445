"""Performance metrics for tracking runs.

The asymptotic tracking error is operationalized on finite runs as the
maximum error over a trailing window (with the window mean reported
alongside for comparability with cumulative-error plots); the remaining
metrics grade compute cost, settling speed, and the structured versus
unstructured trade-off.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

DEFAULT_WINDOW = 0.2
DEFAULT_BAND = 1.1


@dataclass(frozen=True)
class MetricsReport:
    """Scalar summary of one run (plus optional paired quantities)."""

    ate: float
    ate_mean: float
    tr: float
    cr_steps: int
    cr_entered: bool
    path_length: Optional[float] = None
    sg: Optional[float] = None
    improvement_ratio: Optional[float] = None
    slope: Optional[float] = None

    def summary_dict(self, problem, solver, h):
        return {
            "problem": problem,
            "solver": solver,
            "h": h,
            "ate_max": self.ate,
            "ate_mean": self.ate_mean,
            "tr": self.tr,
            "cr_steps": int(self.cr_steps),
            "path_length": self.path_length,
        }


def _errors(traj):
    if traj.errors is None:
        raise ValueError("trajectory has no reference errors")
    return np.asarray(traj.errors, dtype=float)


def trailing_window(n, window_fraction):
    """Start index of the trailing window on a length-n error sequence."""
    if not (0.0 < window_fraction <= 1.0):
        raise ValueError("window fraction must lie in (0, 1]")
    start = int(np.floor(n * (1.0 - window_fraction)))
    return min(max(start, 0), n - 1)


def compute_ate(traj, window_fraction=DEFAULT_WINDOW):
    """Max tracking error over the trailing window."""
    err = _errors(traj)
    return float(np.max(err[trailing_window(len(err), window_fraction):]))


def compute_ate_mean(traj, window_fraction=DEFAULT_WINDOW):
    """Mean tracking error over the trailing window."""
    err = _errors(traj)
    return float(np.mean(err[trailing_window(len(err), window_fraction):]))


def compute_tr(traj, h):
    """Mean per-step wall time divided by the sampling period.

    Values below one mean the solver keeps up with the data stream. The
    initial record entry carries no computation and is excluded.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    wall = np.asarray(traj.wall_ns, dtype=float)[1:]
    if wall.size == 0:
        return 0.0
    return float(np.mean(wall) * 1e-9 / h)


def estimate_cr(traj, band_factor=DEFAULT_BAND, window_fraction=DEFAULT_WINDOW):
    """First step index after which the error stays in the ATE band.

    The band is ``band_factor * compute_ate(traj)``. If the error never
    settles into the band, returns the horizon length with
    ``entered=False``.
    """
    if band_factor <= 1.0:
        raise ValueError("band factor must exceed one")
    err = _errors(traj)
    band = band_factor * compute_ate(traj, window_fraction)
    inside = err <= band
    # last index at which the sequence is still outside the band
    outside = np.nonzero(~inside)[0]
    if outside.size == 0:
        return 0, True
    k = int(outside[-1]) + 1
    if k >= len(err):
        return len(err), False
    return k, True


def compute_sg(ate_structured, ate_unstructured):
    """Ratio of structured to unstructured tracking error.

    Values below one favor the structured method. The reciprocal
    (improvement ratio) is what acceptance checks use; both are exposed.
    """
    if ate_structured <= 0 or ate_unstructured <= 0:
        raise ValueError("both tracking errors must be positive")
    return ate_structured / ate_unstructured


def improvement_ratio(ate_structured, ate_unstructured):
    """Reciprocal of :func:`compute_sg`; above one favors structure."""
    return compute_sg(ate_unstructured, ate_structured)


def loglog_slope(h_values, ate_values):
    """Least-squares slope of log(ate) against log(h)."""
    h = np.asarray(h_values, dtype=float)
    a = np.asarray(ate_values, dtype=float)
    if h.size < 3:
        raise ValueError("need at least 3 sweep points")
    if np.any(h <= 0) or np.any(a <= 0):
        raise ValueError("sweep values must be positive")
    slope, _ = np.polyfit(np.log(h), np.log(a), 1)
    return float(slope)


def path_length(references):
    """Total variation sum ||x*(t_k) - x*(t_{k-1})|| of a reference path."""
    refs = np.atleast_2d(np.asarray(references, dtype=float))
    if refs.shape[0] < 2:
        return 0.0
    return float(np.sum(np.linalg.norm(np.diff(refs, axis=0), axis=1)))


def compute_report(traj, h, window_fraction=DEFAULT_WINDOW,
                   band_factor=DEFAULT_BAND):
    """Bundle the per-run metrics into a report."""
    cr_steps, entered = estimate_cr(traj, band_factor, window_fraction)
    plen = path_length(traj.references) if traj.references is not None else None
    return MetricsReport(
        ate=compute_ate(traj, window_fraction),
        ate_mean=compute_ate_mean(traj, window_fraction),
        tr=compute_tr(traj, h),
        cr_steps=cr_steps,
        cr_entered=entered,
        path_length=plen,
    )
