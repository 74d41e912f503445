"""Continuous-time tracking flows and the time-varying barrier flow.

The core dynamics steer the decision with a Newton-type controller plus
a drift-compensation term built from the time derivative of the
gradient, so that the flow settles on the moving optimizer instead of
lagging behind it. Inequality-constrained problems are handled by
integrating the same dynamics on a log-barrier surrogate whose weight
grows over time, which keeps every iterate strictly feasible.
"""

import time
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .discrete import TrajectoryRecord
from .exceptions import DivergedError, DomainError, NumericalError
from .problems import ConvexityProfile, TVProblemOracle

_FD_EPS = 1e-6


@dataclass(frozen=True)
class FlowConfig:
    """Fixed-step integrator configuration for one flow run."""

    kappa: float
    t_span: tuple
    dt: float
    x0: object
    integrator: str = "rk4"

    def __post_init__(self):
        if self.kappa <= 0:
            raise ValueError("controller gain kappa must be positive")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        t0, t1 = self.t_span
        if t1 <= t0:
            raise ValueError("empty time span")
        if self.integrator not in ("rk4", "euler"):
            raise ValueError(f"unknown integrator {self.integrator!r}")


def _time_grad(oracle, x, t):
    if oracle.has_time_grad:
        return oracle.eval_time_grad(x, t)
    # central difference in t for oracles without the analytic handle
    return (oracle.eval_grad(x, t + _FD_EPS)
            - oracle.eval_grad(x, t - _FD_EPS)) / (2 * _FD_EPS)


def optimal_flow_rhs(oracle, x, t, kappa):
    """Controller velocity -H(x,t)^{-1} (kappa grad f + d/dt grad f)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    H = oracle.eval_hessian(x, t)
    rhs = kappa * oracle.eval_grad(x, t) + _time_grad(oracle, x, t)
    try:
        step = np.linalg.solve(H, rhs)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"singular Hessian at t={t:.6g}") from exc
    return -step


def _euler_step(rhs, t, x, dt):
    return x + dt * rhs(x, t)


def _rk4_step(rhs, t, x, dt):
    k1 = rhs(x, t)
    k2 = rhs(x + 0.5 * dt * k1, t + 0.5 * dt)
    k3 = rhs(x + 0.5 * dt * k2, t + 0.5 * dt)
    k4 = rhs(x + dt * k3, t + dt)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


_STEPPERS = {"euler": _euler_step, "rk4": _rk4_step}

MAX_HALVINGS = 20


def _integrate(rhs, config, domain_check=None):
    """Fixed-step integration with optional domain guarding.

    When a step leaves the admissible domain (detected either by a
    :class:`DomainError` from the right-hand side or by ``domain_check``
    on the landing state), the step is re-taken as 2^j substeps with j
    up to ``MAX_HALVINGS`` before giving up.
    """
    stepper = _STEPPERS[config.integrator]
    t0, t1 = config.t_span
    n_steps = int(round((t1 - t0) / config.dt))
    n_steps = max(n_steps, 1)
    x = np.atleast_1d(np.asarray(config.x0, dtype=float)).copy()
    times = t0 + config.dt * np.arange(n_steps + 1)
    states = np.empty((n_steps + 1, x.shape[0]))
    states[0] = x
    wall_ns = np.zeros(n_steps + 1, dtype=np.int64)
    for i in range(n_steps):
        t = times[i]
        tic = time.perf_counter_ns()
        accepted = None
        for j in range(MAX_HALVINGS + 1):
            n_sub = 2 ** j
            delta = config.dt / n_sub
            try:
                xx = x
                for s in range(n_sub):
                    xx = stepper(rhs, t + s * delta, xx, delta)
                if domain_check is not None and not domain_check(xx, times[i + 1]):
                    raise DomainError("step left the admissible domain")
                accepted = xx
                break
            except DomainError:
                if domain_check is None:
                    raise
                continue
        if accepted is None:
            raise DomainError(
                f"domain violation persisted after {MAX_HALVINGS} halvings "
                f"at t={t:.6g}"
            )
        x = accepted
        wall_ns[i + 1] = time.perf_counter_ns() - tic
        if not np.all(np.isfinite(x)):
            raise DivergedError("flow state is non-finite", step=times[i + 1])
        states[i + 1] = x
    return times, states, wall_ns


def integrate_flow(oracle, config):
    """Integrate the tracking flow and record the trajectory."""

    def rhs(x, t):
        return optimal_flow_rhs(oracle, x, t, config.kappa)

    times, states, wall_ns = _integrate(rhs, config)
    record = TrajectoryRecord(times=times, decisions=states, wall_ns=wall_ns)
    if oracle.has_reference:
        refs = np.stack([oracle.reference_at(t) for t in times])
        record = record.with_reference(refs)
    return record


# --- barrier machinery ---


@dataclass(frozen=True)
class BarrierSchedules:
    """Barrier weight growth c(t) and slack decay s(t).

    c(t) = c0 * exp(c_rate * t) grows without bound; s(t) = s0 *
    exp(-gamma * t) shrinks the constraint relaxation to zero.
    """

    c0: float = 1.0
    c_rate: float = 0.5
    s0: float = 0.0
    gamma: float = 0.5

    def __post_init__(self):
        if self.c0 <= 0 or self.c_rate <= 0:
            raise ValueError("c(t) must be positive and increasing")
        if self.s0 < 0 or self.gamma <= 0:
            raise ValueError("slack schedule needs s0 >= 0 and gamma > 0")

    def c(self, t):
        return self.c0 * np.exp(self.c_rate * t)

    def c_dot(self, t):
        return self.c_rate * self.c(t)

    def s(self, t):
        return self.s0 * np.exp(-self.gamma * t)

    def s_dot(self, t):
        return -self.gamma * self.s(t)


@dataclass(frozen=True)
class ConstraintFunction:
    """One inequality h(x; t) <= 0 with derivative handles.

    ``hess`` defaults to zero (affine constraints). Time handles may be
    omitted: for ``static`` constraints they are exactly zero, otherwise
    they are filled in by central differences.
    """

    value: Callable
    grad: Callable
    hess: Optional[Callable] = None
    time_part: Optional[Callable] = None
    time_grad: Optional[Callable] = None
    static: bool = False

    def h(self, x, t):
        return float(self.value(x, t))

    def dh(self, x, t):
        return np.atleast_1d(np.asarray(self.grad(x, t), dtype=float))

    def d2h(self, x, t, dim):
        if self.hess is None:
            return np.zeros((dim, dim))
        return np.atleast_2d(np.asarray(self.hess(x, t), dtype=float))

    def dt_h(self, x, t):
        if self.static:
            return 0.0
        if self.time_part is not None:
            return float(self.time_part(x, t))
        return (self.h(x, t + _FD_EPS) - self.h(x, t - _FD_EPS)) / (2 * _FD_EPS)

    def dt_dh(self, x, t):
        if self.static:
            return np.zeros_like(self.dh(x, t))
        if self.time_grad is not None:
            return np.atleast_1d(np.asarray(self.time_grad(x, t), dtype=float))
        return (self.dh(x, t + _FD_EPS) - self.dh(x, t - _FD_EPS)) / (2 * _FD_EPS)


@dataclass(frozen=True)
class ConstrainedProblem:
    """Smooth strongly convex objective with inequality constraints."""

    objective: TVProblemOracle
    constraints: Sequence[ConstraintFunction] = ()

    @property
    def p(self):
        return len(self.constraints)


def initial_slack(problem, x0, margin=1.0):
    """Initial slack max(0, max_i h_i(x0; 0)) + margin.

    A strictly positive margin is required: with margin zero and a
    constraint active at the start, the log term is undefined as the
    slack decays.
    """
    if margin <= 0:
        raise ValueError("slack margin must be strictly positive")
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    worst = 0.0
    for con in problem.constraints:
        worst = max(worst, con.h(x0, 0.0))
    return worst + margin


def barrier_margin(problem, sched, x, t):
    """min_i (s(t) - h_i(x; t)); positive inside the barrier domain."""
    if problem.p == 0:
        return np.inf
    s = sched.s(t)
    return min(s - con.h(x, t) for con in problem.constraints)


def barrier_oracle(problem, sched):
    """Assemble the log-barrier surrogate as a problem oracle.

    Returns the plain objective when there are no constraints. All
    handles raise :class:`DomainError` outside {x : h_i(x;t) < s(t)}.
    """
    f = problem.objective
    if problem.p == 0:
        return f
    cons = tuple(problem.constraints)
    n = f.dim

    def gaps(x, t):
        s = sched.s(t)
        d = np.array([s - con.h(x, t) for con in cons])
        if np.any(d <= 0.0):
            raise DomainError(
                f"barrier evaluated outside its domain at t={t:.6g}"
            )
        return d

    def value(x, t):
        d = gaps(x, t)
        return f.eval_f(x, t) - float(np.sum(np.log(d))) / sched.c(t)

    def grad(x, t):
        d = gaps(x, t)
        out = f.eval_grad(x, t).copy()
        inv_c = 1.0 / sched.c(t)
        for con, di in zip(cons, d):
            out += inv_c * con.dh(x, t) / di
        return out

    def hessian(x, t):
        d = gaps(x, t)
        out = f.eval_hessian(x, t).copy()
        inv_c = 1.0 / sched.c(t)
        for con, di in zip(cons, d):
            dh = con.dh(x, t)
            out += inv_c * (con.d2h(x, t, n) / di + np.outer(dh, dh) / di ** 2)
        return out

    def time_grad(x, t):
        d = gaps(x, t)
        c = sched.c(t)
        out = _time_grad(f, x, t).copy()
        s_dot = sched.s_dot(t)
        ratio = sched.c_dot(t) / c ** 2
        for con, di in zip(cons, d):
            dh = con.dh(x, t)
            out -= ratio * dh / di
            out += (con.dt_dh(x, t) / di
                    - dh * (s_dot - con.dt_h(x, t)) / di ** 2) / c
        return out

    return TVProblemOracle(
        dim=n,
        f=value,
        grad=grad,
        hessian=hessian,
        time_grad=time_grad,
        profile=f.profile,
        name=f"{f.name}+barrier",
    )


def barrier_flow(problem, sched, config):
    """Integrate the tracking flow on the barrier surrogate.

    Domain violations during a step trigger substep halving; every
    accepted state is strictly inside the barrier domain.
    """
    oracle = barrier_oracle(problem, sched)

    def rhs(x, t):
        return optimal_flow_rhs(oracle, x, t, config.kappa)

    if problem.p == 0:
        times, states, wall_ns = _integrate(rhs, config)
    else:
        x0 = np.atleast_1d(np.asarray(config.x0, dtype=float))
        if barrier_margin(problem, sched, x0, config.t_span[0]) <= 0:
            raise DomainError("initial point is outside the barrier domain")

        def in_domain(x, t):
            return barrier_margin(problem, sched, x, t) > 0.0

        times, states, wall_ns = _integrate(rhs, config, domain_check=in_domain)
    record = TrajectoryRecord(times=times, decisions=states, wall_ns=wall_ns)
    f = problem.objective
    if f.has_reference:
        refs = np.stack([f.reference_at(t) for t in times])
        record = record.with_reference(refs)
    return record
