"""Single-pass correction maps applied after each cost acquisition.

Both maps contract toward the sampled optimizer at a known linear rate on
strongly convex, smooth costs, which is what makes the per-step tracking
bounds of the discrete solvers computable.
"""

from dataclasses import dataclass

import numpy as np

from .regularizers import prox
from .sets import project


@dataclass(frozen=True)
class CorrectorKind:
    """Correction map selector with its step size.

    ``variant`` is "projected_gradient" or "proximal_gradient"; ``alpha``
    must lie in (0, 2/L) for the map to contract.
    """

    variant: str = "projected_gradient"
    alpha: float = None

    def __post_init__(self):
        if self.variant not in ("projected_gradient", "proximal_gradient"):
            raise ValueError(f"unknown corrector variant {self.variant!r}")
        if self.alpha is not None and self.alpha <= 0:
            raise ValueError("alpha must be positive")


def default_alpha(profile):
    """Step size 2/(m+L), the minimizer of the contraction factor."""
    return 2.0 / (profile.m + profile.L)


def contraction_factor(profile, alpha):
    """Per-pass error contraction max(|1 - alpha*m|, |1 - alpha*L|).

    Strictly below one iff 0 < alpha < 2/L.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    return max(abs(1.0 - alpha * profile.m), abs(1.0 - alpha * profile.L))


def projected_gradient_step(oracle, cset, x, t, alpha):
    """One pass of project(x - alpha * grad f(x; t)) onto ``cset``."""
    x = np.asarray(x, dtype=float)
    y = x - alpha * oracle.eval_grad(x, t)
    if cset is None:
        return y
    return project(cset, y)


def proximal_gradient_step(oracle, g, x, t, alpha):
    """One pass of prox_{alpha g}(x - alpha * grad f(x; t))."""
    x = np.asarray(x, dtype=float)
    y = x - alpha * oracle.eval_grad(x, t)
    return prox(g, alpha, y)


def corrector_step(oracle, x, t, alpha):
    """One correction pass using the oracle's own nonsmooth structure."""
    g = oracle.nonsmooth_at(t)
    x = np.asarray(x, dtype=float)
    y = x - alpha * oracle.eval_grad(x, t)
    if g is None:
        return y
    return g.prox(y, alpha)
