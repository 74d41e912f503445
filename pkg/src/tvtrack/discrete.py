"""Discrete-time tracking solvers.

``run_unstructured`` applies correction passes to each newly sampled
cost; ``run_prediction_correction`` first extrapolates the optimizer
with a predictor built from information up to the current sample, then
corrects on the new cost. Both record the full iterate trajectory with
per-step wall times so the metrics module can grade them.
"""

import time
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .correctors import CorrectorKind, corrector_step, default_alpha
from .exceptions import DivergedError, IterationCapError
from .predictors import (
    HintStream,
    KalmanModel,
    build_taylor_model,
    hint_gradient,
    kalman_predict,
    predict_by_parameter,
    predict_composite,
    predict_unconstrained,
)
from .problems import TimeGrid
from .regularizers import prox

PREDICTORS = ("none", "taylor", "kalman", "hint", "clairvoyant")

DIVERGENCE_LIMIT = 1e12


@dataclass(frozen=True)
class SolverConfig:
    """Configuration of one discrete solver run.

    ``P`` prediction passes and ``C`` correction passes per step; ``P``
    must be zero exactly when ``predictor`` is "none".
    ``exact_prediction`` replaces the model passes with a direct SPD
    solve (smooth unconstrained problems only).
    """

    grid: TimeGrid
    alpha: Optional[float] = None
    C: int = 1
    P: int = 0
    predictor: str = "none"
    exact_prediction: bool = False
    x0: object = None
    kalman: Optional[KalmanModel] = None
    observe: object = None
    hints: Optional[HintStream] = None
    corrector: Optional[CorrectorKind] = None

    def __post_init__(self):
        if self.predictor not in PREDICTORS:
            raise ValueError(f"unknown predictor {self.predictor!r}")
        if self.C < 1:
            raise ValueError("C must be at least 1")
        if (self.P == 0) != (self.predictor == "none"):
            raise ValueError("P = 0 exactly when predictor is 'none'")
        if self.P < 0:
            raise ValueError("P must be nonnegative")
        if self.exact_prediction and self.predictor != "taylor":
            raise ValueError("exact prediction applies to the taylor predictor")


@dataclass(frozen=True)
class TrajectoryRecord:
    """Per-step record of a solver run.

    Arrays all have length ``k_max + 1``; ``wall_ns[0]`` is zero since
    the initial point involves no computation. ``references`` and
    ``errors`` are present only when a reference trajectory is known.
    """

    times: np.ndarray
    decisions: np.ndarray
    wall_ns: np.ndarray
    references: Optional[np.ndarray] = None
    errors: Optional[np.ndarray] = None

    def __len__(self):
        return self.times.shape[0]

    @property
    def has_reference(self):
        return self.references is not None

    def with_reference(self, references):
        refs = np.atleast_2d(np.asarray(references, dtype=float))
        if refs.shape[0] != len(self):
            raise ValueError("reference length does not match trajectory")
        errors = np.linalg.norm(self.decisions - refs, axis=1)
        return replace(self, references=refs, errors=errors)


def _resolve_alpha(oracle, config):
    alpha = config.alpha
    if config.corrector is not None and config.corrector.alpha is not None:
        alpha = config.corrector.alpha
    if alpha is None:
        alpha = default_alpha(oracle.profile)
    if not (0.0 < alpha < 2.0 / oracle.profile.L):
        raise ValueError(
            f"alpha={alpha} outside the contraction range (0, 2/L)"
        )
    return alpha


def _initial_point(oracle, config):
    if config.x0 is None:
        return np.zeros(oracle.dim)
    x0 = np.atleast_1d(np.asarray(config.x0, dtype=float)).copy()
    if x0.shape != (oracle.dim,):
        raise ValueError("x0 dimension mismatch")
    return x0


def _check_finite(x, k):
    if not np.all(np.isfinite(x)) or np.linalg.norm(x) > DIVERGENCE_LIMIT:
        raise DivergedError("solver iterate diverged", step=k)


def _finish(oracle, times, decisions, wall_ns):
    record = TrajectoryRecord(
        times=times,
        decisions=np.asarray(decisions),
        wall_ns=np.asarray(wall_ns, dtype=np.int64),
    )
    if oracle.has_reference:
        refs = np.stack([oracle.reference_at(t) for t in times])
        record = record.with_reference(refs)
    return record


def run_unstructured(oracle, config):
    """Correction-only tracking: C corrector passes per new sample."""
    if config.predictor != "none":
        raise ValueError("run_unstructured requires predictor='none'")
    alpha = _resolve_alpha(oracle, config)
    grid = config.grid
    times = grid.times()
    x = _initial_point(oracle, config)
    decisions = [x.copy()]
    wall_ns = [0]
    for k in range(grid.k_max):
        t_next = times[k + 1]
        tic = time.perf_counter_ns()
        u = x
        for _ in range(config.C):
            u = corrector_step(oracle, u, t_next, alpha)
        wall_ns.append(time.perf_counter_ns() - tic)
        x = u
        _check_finite(x, k + 1)
        decisions.append(x.copy())
    return _finish(oracle, times, decisions, wall_ns)


def _copy_kalman(km):
    return KalmanModel(
        trans=km.trans.copy(),
        obs=km.obs.copy(),
        proc_cov=km.proc_cov.copy(),
        obs_cov=km.obs_cov.copy(),
        state=km.state.copy(),
        cov=km.cov.copy(),
    )


def run_prediction_correction(oracle, config):
    """Structured tracking: predict with data through t_k, then correct.

    Prediction passes apply the projection/prox of the problem after
    each model-gradient step; correction passes use the newly sampled
    cost at t_{k+1}.
    """
    if config.predictor == "none":
        return run_unstructured(oracle, config)
    alpha = _resolve_alpha(oracle, config)
    grid = config.grid
    times = grid.times()
    x = _initial_point(oracle, config)
    decisions = [x.copy()]
    wall_ns = [0]

    kind = config.predictor
    km = _copy_kalman(config.kalman) if kind == "kalman" else None
    if kind == "kalman":
        if oracle.family is None:
            raise ValueError("kalman predictor needs a parametrized oracle")
        observe = config.observe
        if observe is None:
            obs_mat = km.obs

            def observe(t):
                return obs_mat @ oracle.family.param_at(t)

    for k in range(grid.k_max):
        t_k = times[k]
        t_next = times[k + 1]
        tic = time.perf_counter_ns()

        if kind == "taylor":
            model = build_taylor_model(oracle, x, t_k, grid.h, t0=grid.t0)
            if config.exact_prediction:
                if oracle.nonsmooth_at(t_k) is not None:
                    raise ValueError(
                        "exact prediction requires a smooth unconstrained problem"
                    )
                u = predict_unconstrained(model)
            else:
                u = predict_composite(model, oracle.nonsmooth_at(t_k),
                                      config.P, alpha)
        elif kind == "kalman":
            forecast, km = kalman_predict(km, observe(t_k))
            u = predict_by_parameter(oracle, forecast, config.P, alpha, x, t_k)
        else:
            if kind == "hint":
                if config.hints is None:
                    raise ValueError("hint predictor needs a hint stream")
                m_k = hint_gradient(config.hints, k)
            else:  # clairvoyant: exact knowledge of the next gradient
                def m_k(z, _t=t_next):
                    return oracle.eval_grad(z, _t)
            g_pred = oracle.nonsmooth_at(t_k)
            u = x
            for _ in range(config.P):
                u = prox(g_pred, alpha, u - alpha * m_k(u))

        for _ in range(config.C):
            u = corrector_step(oracle, u, t_next, alpha)
        wall_ns.append(time.perf_counter_ns() - tic)
        x = u
        _check_finite(x, k + 1)
        decisions.append(x.copy())
    return _finish(oracle, times, decisions, wall_ns)


def solve_frozen(oracle, t, x0, tol=1e-10, max_iter=1_000_000, alpha=None):
    """Solve the problem frozen at time ``t`` by corrector iterations.

    Stops when the movement of one corrector pass falls below
    ``tol * alpha`` (a gradient-mapping residual of ``tol``).
    """
    if alpha is None:
        alpha = default_alpha(oracle.profile)
    u = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    for _ in range(max_iter):
        u_new = corrector_step(oracle, u, t, alpha)
        if np.linalg.norm(u_new - u) <= tol * alpha:
            return u_new
        u = u_new
    raise IterationCapError(
        f"frozen solve at t={t:.6g} exceeded {max_iter} iterations"
    )


def reference_trajectory(oracle, grid, tol=1e-10):
    """Ground-truth optimizer at every grid time.

    Uses the analytic reference when the oracle provides one, a fast
    box-QP path when the problem exposes quadratic structure, and
    warm-started corrector iterations otherwise.
    """
    times = grid.times()
    if oracle.has_reference:
        return np.stack([oracle.reference_at(t) for t in times])
    qb = getattr(oracle, "quad_box", None)
    if qb is not None:
        from .kernels import box_qp_projected_gradient

        alpha = default_alpha(oracle.profile)
        lo, hi = qb.bounds()
        refs = np.empty((len(times), oracle.dim))
        x = np.zeros(oracle.dim)
        for i, t in enumerate(times):
            q = qb.lin(t)
            x, move, iters = box_qp_projected_gradient(
                qb.hess, q, lo, hi, x, alpha, tol * alpha, 1_000_000
            )
            if move > tol * alpha:
                raise IterationCapError(
                    f"box-QP reference solve stalled at t={t:.6g}"
                )
            refs[i] = x
        return refs
    refs = np.empty((len(times), oracle.dim))
    x = np.zeros(oracle.dim)
    for i, t in enumerate(times):
        x = solve_frozen(oracle, t, x, tol=tol)
        refs[i] = x
    return refs
