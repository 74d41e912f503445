"""Predictors that extrapolate the optimizer before the next cost arrives.

The workhorse is a first-order expansion of the optimality condition at
the current iterate, giving an affine gradient model whose root (or
regularized fixed point) is the predicted optimizer. Parameter-filtering
and hint-based predictors are provided for problems with observable
structure; a zero hint reduces the structured solver to the plain running
method.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
import scipy.linalg

from .exceptions import (
    ExhaustedStreamError,
    ModelConstructionError,
    NumericalError,
)
from .problems import finite_diff_time_grad
from .regularizers import prox

COND_LIMIT = 1e12


@dataclass(frozen=True)
class QuadraticModel:
    """Affine model of the gradient around an anchor point.

    The model gradient at x is ``g0 + hess @ (x - anchor) + time_term``,
    where ``time_term`` already carries the sampling period, so the model
    root approximates the optimizer one period ahead.
    """

    anchor: np.ndarray
    g0: np.ndarray
    hess: np.ndarray
    time_term: np.ndarray

    def grad(self, x):
        return self.g0 + self.hess @ (np.asarray(x, dtype=float) - self.anchor) \
            + self.time_term


def build_taylor_model(oracle, x_hat, t_k, h, t0=0.0):
    """Assemble the affine gradient model at (x_hat, t_k).

    Uses the oracle's analytic time derivative of the gradient when
    available; otherwise substitutes the backward finite difference. At
    the very first sample (no history) the time term is set to zero.
    Raises :class:`ModelConstructionError` if the Hessian is not
    symmetric positive definite.
    """
    x_hat = np.atleast_1d(np.asarray(x_hat, dtype=float))
    g0 = oracle.eval_grad(x_hat, t_k)
    H = oracle.eval_hessian(x_hat, t_k)
    if not np.allclose(H, H.T, atol=1e-10, rtol=0.0):
        raise ModelConstructionError("Hessian is not symmetric")
    try:
        np.linalg.cholesky(H)
    except np.linalg.LinAlgError as exc:
        raise ModelConstructionError("Hessian is not positive definite") from exc
    if oracle.has_time_grad:
        dtg = oracle.eval_time_grad(x_hat, t_k)
    elif t_k - h >= t0 - 1e-12:
        dtg = finite_diff_time_grad(oracle, x_hat, t_k, h, t0=t0)
    else:
        # no history yet: fall back to a drift-free model
        dtg = np.zeros_like(g0)
    return QuadraticModel(anchor=x_hat, g0=g0, hess=H, time_term=h * dtg)


def predict_unconstrained(model):
    """Root of the affine gradient model via an SPD linear solve."""
    H = model.hess
    cond = np.linalg.cond(H)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise NumericalError(
            f"model Hessian condition number {cond:.3e} exceeds {COND_LIMIT:.0e}"
        )
    rhs = model.g0 + model.time_term
    try:
        c, low = scipy.linalg.cho_factor(H)
        step = scipy.linalg.cho_solve((c, low), rhs)
    except scipy.linalg.LinAlgError as exc:
        raise NumericalError("SPD factorization of model Hessian failed") from exc
    return model.anchor - step


def predict_composite(model, g, P, alpha):
    """P proximal-gradient passes on the model, started at the anchor.

    Each pass is u <- prox_{alpha g}(u - alpha * model.grad(u)); with
    g = None this contracts to the unconstrained model root.
    """
    if P < 1:
        raise ValueError("P must be at least 1")
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    u = model.anchor.copy()
    for _ in range(P):
        u = prox(g, alpha, u - alpha * model.grad(u))
    return u


# --- parameter filtering ---


@dataclass
class KalmanModel:
    """Linear-Gaussian filter state for a parameter signal.

    ``trans`` is the state transition, ``obs`` the observation matrix,
    ``proc_cov``/``obs_cov`` the noise covariances. ``state`` holds the
    one-step-ahead parameter forecast and ``cov`` its covariance; the
    covariance defaults to the identity when not supplied.
    """

    trans: np.ndarray
    obs: np.ndarray
    proc_cov: np.ndarray
    obs_cov: np.ndarray
    state: np.ndarray
    cov: np.ndarray = None

    def __post_init__(self):
        self.trans = np.atleast_2d(np.asarray(self.trans, dtype=float))
        self.obs = np.atleast_2d(np.asarray(self.obs, dtype=float))
        self.proc_cov = np.atleast_2d(np.asarray(self.proc_cov, dtype=float))
        self.obs_cov = np.atleast_2d(np.asarray(self.obs_cov, dtype=float))
        self.state = np.atleast_1d(np.asarray(self.state, dtype=float))
        l = self.state.shape[0]
        if self.cov is None:
            self.cov = np.eye(l)
        else:
            self.cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if self.trans.shape != (l, l):
            raise ValueError("transition matrix shape mismatch")
        if self.obs.shape[1] != l:
            raise ValueError("observation matrix shape mismatch")
        for mat, nm in ((self.proc_cov, "proc_cov"), (self.obs_cov, "obs_cov"),
                        (self.cov, "cov")):
            if not np.allclose(mat, mat.T, atol=1e-12):
                raise ValueError(f"{nm} must be symmetric")


def kalman_predict(km, y):
    """One measurement update plus one-step-ahead forecast.

    Returns ``(forecast, km)`` where the forecast is the transition
    applied to the posterior state; ``km`` is updated in place to hold
    the forecast and its covariance, ready for the next observation.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    H, P = km.obs, km.cov
    S = H @ P @ H.T + km.obs_cov
    cond = np.linalg.cond(S)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise NumericalError("innovation covariance is singular")
    gain = P @ H.T @ np.linalg.inv(S)
    posterior = km.state + gain @ (y - H @ km.state)
    # Joseph form keeps the covariance PSD under roundoff
    I_KH = np.eye(P.shape[0]) - gain @ H
    P_post = I_KH @ P @ I_KH.T + gain @ km.obs_cov @ gain.T
    forecast = km.trans @ posterior
    km.state = forecast
    km.cov = km.trans @ P_post @ km.trans.T + km.proc_cov
    return forecast, km


# --- hints ---


@dataclass(frozen=True)
class HintStream:
    """Sequence of gradient approximators m_k for the prediction phase.

    Each entry is either a vector (used as a constant gradient) or a
    callable x -> gradient. ``hints`` may be a sequence or a callable
    k -> entry for unbounded streams.
    """

    hints: Union[Sequence, Callable]
    dim: int

    def entry(self, k):
        if callable(self.hints):
            out = self.hints(k)
        else:
            if k < 0 or k >= len(self.hints):
                raise ExhaustedStreamError(f"no hint for step {k}")
            out = self.hints[k]
        if out is None:
            raise ExhaustedStreamError(f"no hint for step {k}")
        return out

    @classmethod
    def zero(cls, dim):
        """The all-zero stream, which disables prediction entirely."""
        z = np.zeros(dim)
        return cls(hints=lambda k: z, dim=dim)


def hint_gradient(hints, k):
    """The step-k gradient approximator as a callable x -> vector."""
    m_k = hints.entry(k)
    if callable(m_k):
        return m_k
    vec = np.atleast_1d(np.asarray(m_k, dtype=float))

    def const(_x):
        return vec

    return const


def predict_by_parameter(oracle, b_forecast, budget, alpha, x_start, t_next):
    """Warm-started corrector passes on the frozen cost f(.; b_forecast).

    Requires the oracle to expose a parametrized family; the nonsmooth
    structure sampled at ``t_next`` is applied on every pass.
    """
    fam = oracle.family
    if fam is None:
        raise ValueError("oracle has no parametrized family")
    if budget < 1:
        raise ValueError("budget must be at least 1")
    b = np.atleast_1d(np.asarray(b_forecast, dtype=float))
    g = oracle.nonsmooth_at(t_next)
    u = np.atleast_1d(np.asarray(x_start, dtype=float)).copy()
    for _ in range(budget):
        u = prox(g, alpha, u - alpha * np.asarray(fam.grad(u, b), dtype=float))
    return u
