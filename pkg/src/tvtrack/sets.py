"""Convex constraint sets and Euclidean projections.

Boxes, balls, and single halfspaces project in closed form. Halfspace
intersections (polytopes) project via Dykstra's alternating projections,
which is exact in the limit and needs no external solver; the iteration
cap and tolerance below are sized for scenes with at most a few dozen
facets.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import InfeasibleSetError, ProjectionConvergenceError
from .kernels import dykstra_halfspaces

DYKSTRA_MAX_CYCLES = 10_000
DYKSTRA_TOL = 1e-10


class ConstraintSet:
    """Base class; subclasses implement ``project`` and ``contains``."""

    def project(self, x):
        raise NotImplementedError

    def contains(self, x, tol=1e-9):
        raise NotImplementedError


@dataclass(frozen=True)
class WholeSpace(ConstraintSet):
    """No constraint; projection is the identity."""

    def project(self, x):
        return np.asarray(x, dtype=float)

    def contains(self, x, tol=1e-9):
        return True


@dataclass(frozen=True)
class Box(ConstraintSet):
    """Axis-aligned box {x : lo <= x <= hi} (entries may be +/-inf)."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape:
            raise ValueError("box bounds must have equal shapes")
        if np.any(lo > hi):
            raise InfeasibleSetError("box has lo > hi in some coordinate")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def project(self, x):
        return np.clip(np.asarray(x, dtype=float), self.lo, self.hi)

    def contains(self, x, tol=1e-9):
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))


@dataclass(frozen=True)
class Ball(ConstraintSet):
    """Euclidean ball {x : ||x - center|| <= radius}."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise InfeasibleSetError("ball radius must be positive")
        object.__setattr__(
            self, "center", np.atleast_1d(np.asarray(self.center, dtype=float))
        )

    def project(self, x):
        x = np.asarray(x, dtype=float)
        d = x - self.center
        nrm = np.linalg.norm(d)
        if nrm <= self.radius:
            return x
        return self.center + (self.radius / nrm) * d

    def contains(self, x, tol=1e-9):
        return bool(np.linalg.norm(np.asarray(x, dtype=float) - self.center)
                    <= self.radius + tol)


@dataclass(frozen=True)
class HalfspaceIntersection(ConstraintSet):
    """Polytope {x : Ax <= b}, optionally intersected with a box.

    A single row projects in closed form; multiple rows go through
    Dykstra's method. Rows must be nonzero.
    """

    normals: np.ndarray
    offsets: np.ndarray
    box: Optional[Box] = field(default=None)

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.normals, dtype=float))
        b = np.atleast_1d(np.asarray(self.offsets, dtype=float))
        if A.shape[0] != b.shape[0]:
            raise ValueError("normals/offsets row counts differ")
        norms = np.linalg.norm(A, axis=1)
        if np.any(norms == 0.0):
            raise ValueError("polytope normals must be nonzero")
        # normalize rows so constraint violations are signed distances
        object.__setattr__(self, "normals", A / norms[:, None])
        object.__setattr__(self, "offsets", b / norms)

    @property
    def dim(self):
        return self.normals.shape[1]

    def project(self, x):
        x = np.asarray(x, dtype=float)
        A, b = self.normals, self.offsets
        if A.shape[0] == 1 and self.box is None:
            # closed-form halfspace projection
            a = A[0]
            viol = a @ x - b[0]
            if viol <= 0.0:
                return x.copy()
            return x - (viol / (a @ a)) * a
        if self.box is not None:
            lo, hi = self.box.lo, self.box.hi
        else:
            lo = np.full(self.dim, -np.inf)
            hi = np.full(self.dim, np.inf)
        # the movement floor of float64 scales with the iterate magnitude
        tol = DYKSTRA_TOL * max(1.0, float(np.max(np.abs(x))))
        u, residual, _ = dykstra_halfspaces(
            A, b, lo, hi, x, DYKSTRA_MAX_CYCLES, tol
        )
        if residual > max(tol, 1e-9):
            if not self.is_feasible():
                raise InfeasibleSetError(
                    "polytope is empty: halfspace intersection infeasible"
                )
            raise ProjectionConvergenceError(
                "Dykstra projection did not converge within the cycle cap",
                residual,
            )
        return u

    def contains(self, x, tol=1e-9):
        x = np.asarray(x, dtype=float)
        ok = bool(np.all(self.normals @ x - self.offsets <= tol))
        if self.box is not None:
            ok = ok and self.box.contains(x, tol)
        return ok

    def is_feasible(self):
        """Check nonemptiness with a feasibility LP."""
        from scipy.optimize import linprog

        n = self.dim
        bounds = [(None, None)] * n
        if self.box is not None:
            bounds = [
                (
                    None if np.isneginf(l) else l,
                    None if np.isposinf(h) else h,
                )
                for l, h in zip(self.box.lo, self.box.hi)
            ]
        res = linprog(
            c=np.zeros(n),
            A_ub=self.normals,
            b_ub=self.offsets,
            bounds=bounds,
            method="highs",
        )
        return res.status != 2  # 2 = infeasible


def project(cset, x):
    """Euclidean projection of ``x`` onto the constraint set."""
    return cset.project(np.asarray(x, dtype=float))
