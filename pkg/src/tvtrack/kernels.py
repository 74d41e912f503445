"""Hot numeric kernels.

The inner loops that dominate runtime (cyclic projection onto halfspace
intersections, frozen-time box-QP solves) live here as plain loop-based
functions that numba can compile. When numba is importable and the
environment variable ``TVTRACK_DISABLE_NUMBA`` is not set to a truthy
value, the kernels are jitted with ``@njit(cache=True)``; otherwise the
same source runs as pure numpy/Python. ``scripts/bench_numba.py``
compares the two paths.
"""

import os

import numpy as np


def _numba_enabled():
    flag = os.environ.get("TVTRACK_DISABLE_NUMBA", "").strip().lower()
    if flag in ("1", "true", "yes", "on"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


HAS_NUMBA = _numba_enabled()


def _worst_violation(A, b, lo, hi, u):
    worst = 0.0
    m, n = A.shape
    for i in range(m):
        viol = -b[i]
        for j in range(n):
            viol += A[i, j] * u[j]
        if viol > worst:
            worst = viol
    for j in range(n):
        if u[j] - hi[j] > worst:
            worst = u[j] - hi[j]
        if lo[j] - u[j] > worst:
            worst = lo[j] - u[j]
    return worst


def _dykstra_halfspaces(A, b, lo, hi, x, max_cycles, tol):
    """Dykstra's alternating projections onto {u: Au <= b, lo <= u <= hi}.

    Returns (point, residual, cycles used), where the residual is the
    larger of the last per-cycle movement and the worst constraint
    violation. The box is treated as one extra set in the cycle; pass
    +/-inf bounds to disable it.
    """
    m, n = A.shape
    u = x.astype(np.float64).copy()
    # one increment per halfspace plus one for the box
    p = np.zeros((m + 1, n))
    move = np.inf
    for cycle in range(max_cycles):
        u_prev = u.copy()
        for i in range(m):
            v = u + p[i]
            viol = -b[i]
            nrm2 = 0.0
            for j in range(n):
                viol += A[i, j] * v[j]
                nrm2 += A[i, j] * A[i, j]
            if viol > 0.0:
                u = v - (viol / nrm2) * A[i]
            else:
                u = v.copy()
            p[i] = v - u
        v = u + p[m]
        u = np.minimum(np.maximum(v, lo), hi)
        p[m] = v - u
        move = 0.0
        for j in range(n):
            d = u[j] - u_prev[j]
            move += d * d
        move = np.sqrt(move)
        if move <= tol:
            worst = _worst_violation(A, b, lo, hi, u)
            if worst <= max(tol, 1e-9):
                return u, max(move, worst), cycle + 1
    residual = max(move, _worst_violation(A, b, lo, hi, u))
    return u, residual, max_cycles


def _box_qp_projected_gradient(H, q, lo, hi, x0, alpha, tol, max_iter):
    """Projected gradient on min 0.5 x'Hx + q'x over a box.

    Stops when the step movement ||x - clip(x - alpha*(Hx+q))|| falls
    below ``tol``. Returns (point, last movement, iterations used).
    """
    n = x0.shape[0]
    x = x0.astype(np.float64).copy()
    move = np.inf
    for it in range(max_iter):
        g = q.copy()
        for i in range(n):
            acc = 0.0
            for j in range(n):
                acc += H[i, j] * x[j]
            g[i] += acc
        x_new = np.minimum(np.maximum(x - alpha * g, lo), hi)
        move = 0.0
        for i in range(n):
            d = x_new[i] - x[i]
            move += d * d
        move = np.sqrt(move)
        x = x_new
        if move <= tol:
            return x, move, it + 1
    return x, move, max_iter


if HAS_NUMBA:
    from numba import njit

    # rebind the helper first so the jitted dykstra resolves the jitted one
    _worst_violation = njit(cache=True)(_worst_violation)
    dykstra_halfspaces = njit(cache=True)(_dykstra_halfspaces)
    box_qp_projected_gradient = njit(cache=True)(_box_qp_projected_gradient)
else:
    dykstra_halfspaces = _dykstra_halfspaces
    box_qp_projected_gradient = _box_qp_projected_gradient


def warmup():
    """Trigger jit compilation of all kernels (no-op on the numpy path)."""
    A = np.array([[1.0, 0.0]])
    b = np.array([1.0])
    lo = np.full(2, -np.inf)
    hi = np.full(2, np.inf)
    dykstra_halfspaces(A, b, lo, hi, np.array([2.0, 0.0]), 10, 1e-10)
    H = np.eye(2)
    box_qp_projected_gradient(H, np.zeros(2), -b, b, np.zeros(2), 0.5, 1e-10, 10)
