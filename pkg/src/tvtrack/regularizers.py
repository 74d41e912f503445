"""Nonsmooth regularizers with proximal operators.

A regularizer g contributes ``prox(g, alpha, x) = argmin_u g(u) +
||u - x||^2 / (2 alpha)``. The indicator of a constraint set reduces the
prox to the Euclidean projection, which is how constrained problems enter
the composite solver path.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import UnsupportedOperationError
from .sets import ConstraintSet


class Regularizer:
    """Base class: convex, closed, proper function with a prox handle."""

    def value(self, x):
        raise NotImplementedError

    def prox(self, x, alpha):
        raise UnsupportedOperationError(
            f"{type(self).__name__} does not provide a proximal operator"
        )


@dataclass(frozen=True)
class ZeroFunction(Regularizer):
    """g = 0; prox is the identity."""

    def value(self, x):
        return 0.0

    def prox(self, x, alpha):
        return np.asarray(x, dtype=float)


@dataclass(frozen=True)
class L1Norm(Regularizer):
    """g(x) = weight * ||x||_1; prox is coordinatewise soft thresholding."""

    weight: float = 1.0

    def __post_init__(self):
        if self.weight < 0:
            raise ValueError("l1 weight must be nonnegative")

    def value(self, x):
        return self.weight * float(np.sum(np.abs(x)))

    def prox(self, x, alpha):
        return soft_threshold(np.asarray(x, dtype=float), alpha * self.weight)


@dataclass(frozen=True)
class SetIndicator(Regularizer):
    """Indicator of a convex set; prox equals the projection."""

    cset: ConstraintSet

    def value(self, x):
        return 0.0 if self.cset.contains(x) else np.inf

    def prox(self, x, alpha):
        return self.cset.project(x)


def soft_threshold(x, thr):
    """Coordinatewise shrinkage sign(x) * max(|x| - thr, 0)."""
    return np.sign(x) * np.maximum(np.abs(x) - thr, 0.0)


def prox(g, alpha, x):
    """Proximal operator of ``g`` with step ``alpha`` evaluated at ``x``."""
    if alpha <= 0:
        raise ValueError("prox step size must be positive")
    if g is None:
        return np.asarray(x, dtype=float)
    return g.prox(np.asarray(x, dtype=float), alpha)
