"""Time-parametrized problem oracles and sampling grids.

A :class:`TVProblemOracle` bundles the evaluatable handles of a cost
f(x; t) that drifts over time: value, gradient, Hessian, and (optionally)
the time derivative of the gradient. A problem carries at most one
nonsmooth part, either a constraint set (projected solvers) or a
regularizer (proximal solvers); a set can always be re-expressed as its
indicator regularizer for the composite path.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .exceptions import InsufficientHistoryError, UnsupportedOperationError
from .regularizers import Regularizer, SetIndicator
from .sets import ConstraintSet


@dataclass(frozen=True)
class TimeGrid:
    """Uniform sampling grid t_k = t0 + k*h for k = 0..k_max."""

    h: float
    k_max: int
    t0: float = 0.0

    def __post_init__(self):
        if self.h <= 0:
            raise ValueError("sampling period h must be positive")
        if self.k_max < 1:
            raise ValueError("horizon k_max must be at least 1")

    def time(self, k):
        return self.t0 + k * self.h

    def times(self):
        return self.t0 + self.h * np.arange(self.k_max + 1)


@dataclass(frozen=True)
class ConvexityProfile:
    """Strong convexity and smoothness constants of the smooth part."""

    m: float
    L: float

    def __post_init__(self):
        if not (0 < self.m <= self.L):
            raise ValueError("profile requires 0 < m <= L")


@dataclass(frozen=True)
class DriftBounds:
    """Bounds on how fast the optimizer can move.

    ``K`` bounds the optimizer displacement per sampling step; ``delta0``
    bounds the norm of the mixed derivative of the cost, which implies
    K = delta0 * h / m. ``delta1`` bounds third derivatives when known.
    """

    K: Optional[float] = None
    delta0: Optional[float] = None
    delta1: Optional[float] = None

    def __post_init__(self):
        for name in ("K", "delta0", "delta1"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ValueError(f"{name} must be nonnegative")

    def step_bound(self, h, m):
        """Per-step optimizer drift bound for period h and constant m."""
        if self.delta0 is not None:
            implied = self.delta0 * h / m
            if self.K is not None:
                if self.K > implied * (1 + 1e-9):
                    raise ValueError("K inconsistent with delta0 * h / m")
                return self.K
            return implied
        if self.K is not None:
            return self.K
        raise ValueError("no drift information available")


@dataclass(frozen=True)
class QuadraticBoxStructure:
    """Fast-solve hint for costs of the form 0.5 x'Hx + q(t)'x over a box.

    ``hess`` is the constant Hessian, ``lin`` maps t to the linear term
    q(t) so the gradient is H x + q(t). Lets reference solves go through
    the compiled box-QP kernel instead of generic corrector iterations.
    """

    hess: np.ndarray
    lin: Callable[[float], np.ndarray]
    box: object = None

    def bounds(self):
        n = self.hess.shape[0]
        if self.box is None:
            return np.full(n, -np.inf), np.full(n, np.inf)
        return self.box.lo, self.box.hi


@dataclass(frozen=True)
class ParameterizedFamily:
    """A cost family f(x; b) driven by a parameter signal b(t).

    Used by the parameter-forecast predictor: the solver filters
    observations of b(t) and pre-solves f(x; b_forecast).
    """

    param_dim: int
    signal: Callable[[float], np.ndarray]
    grad: Callable[[np.ndarray, np.ndarray], np.ndarray]
    value: Optional[Callable[[np.ndarray, np.ndarray], float]] = None

    def param_at(self, t):
        return np.atleast_1d(np.asarray(self.signal(t), dtype=float))


@dataclass(frozen=True)
class TVProblemOracle:
    """Evaluatable time-varying cost with optional nonsmooth structure.

    Parameters
    ----------
    dim : int
        Decision dimension n.
    f, grad, hessian : callable
        Handles (x, t) -> value / gradient / Hessian.
    time_grad : callable, optional
        Handle for the time derivative of the gradient. When absent the
        solvers substitute a backward finite difference.
    regularizer : Regularizer, optional
        Nonsmooth additive term (proximal path).
    constraint_set : ConstraintSet or callable, optional
        Feasible set (projected path); a callable is sampled at each t.
    profile : ConvexityProfile
        Strong convexity / smoothness constants.
    drift : DriftBounds, optional
    reference_solution : callable, optional
        t -> exact optimizer, when known analytically.
    family : ParameterizedFamily, optional
    name : str
    """

    dim: int
    f: Callable
    grad: Callable
    hessian: Callable
    profile: ConvexityProfile
    time_grad: Optional[Callable] = None
    regularizer: Optional[Regularizer] = None
    constraint_set: object = None
    drift: Optional[DriftBounds] = None
    reference_solution: Optional[Callable] = None
    family: Optional[ParameterizedFamily] = None
    quad_box: Optional[QuadraticBoxStructure] = None
    name: str = "problem"

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.regularizer is not None and self.constraint_set is not None:
            raise ValueError(
                "at most one of regularizer / constraint_set may be active"
            )

    # --- smooth part ---

    def eval_f(self, x, t):
        return float(self.f(np.asarray(x, dtype=float), t))

    def eval_grad(self, x, t):
        return np.atleast_1d(
            np.asarray(self.grad(np.asarray(x, dtype=float), t), dtype=float)
        )

    def eval_hessian(self, x, t):
        return np.atleast_2d(
            np.asarray(self.hessian(np.asarray(x, dtype=float), t), dtype=float)
        )

    @property
    def has_time_grad(self):
        return self.time_grad is not None

    def eval_time_grad(self, x, t):
        if self.time_grad is None:
            raise UnsupportedOperationError(
                f"oracle '{self.name}' has no analytic time gradient; "
                "use finite_diff_time_grad"
            )
        return np.atleast_1d(
            np.asarray(self.time_grad(np.asarray(x, dtype=float), t), dtype=float)
        )

    # --- nonsmooth part ---

    def constraint_set_at(self, t):
        """Sample the feasible set at time t (None when unconstrained)."""
        cs = self.constraint_set
        if cs is None or isinstance(cs, ConstraintSet):
            return cs
        return cs(t)

    def nonsmooth_at(self, t):
        """The active nonsmooth term as a Regularizer, or None."""
        if self.regularizer is not None:
            return self.regularizer
        cs = self.constraint_set_at(t)
        if cs is not None:
            return SetIndicator(cs)
        return None

    @property
    def has_reference(self):
        return self.reference_solution is not None

    def reference_at(self, t):
        return np.atleast_1d(
            np.asarray(self.reference_solution(t), dtype=float)
        )


def finite_diff_time_grad(oracle, x, t_k, h, t0=0.0):
    """First-order backward difference estimate of the mixed derivative.

    Returns (grad f(x; t_k) - grad f(x; t_{k-1})) / h, an O(h)-accurate
    substitute for the analytic time derivative of the gradient.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    if t_k - h < t0 - 1e-12:
        raise InsufficientHistoryError(
            f"no sample before t={t_k:.6g} with period h={h:.6g}"
        )
    g_now = oracle.eval_grad(x, t_k)
    g_prev = oracle.eval_grad(x, t_k - h)
    return (g_now - g_prev) / h
