"""Benchmark problem instances with known structure.

Each factory returns a fully wired :class:`TVProblemOracle`: analytic
derivative handles where the construction provides them, references via
closed forms where they exist, and drift bounds for the instances whose
tracking bounds the tests check.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .problems import (
    ConvexityProfile,
    DriftBounds,
    ParameterizedFamily,
    QuadraticBoxStructure,
    TVProblemOracle,
)
from .regularizers import L1Norm, soft_threshold
from .sets import Box


def make_sinusoid_quadratic(omega, amplitude=1.0, dim=1):
    """Quadratic tracking of a sinusoidal target.

    f(x; t) = 0.5 ||x - b(t)||^2 with b(t) = amplitude * cos(omega t) * 1.
    The optimizer is b(t) itself, so every tracking quantity has a
    closed form.
    """
    if omega < 0:
        raise ValueError("omega must be nonnegative")
    ones = np.ones(dim)

    def b(t):
        return amplitude * np.cos(omega * t) * ones

    def b_dot(t):
        return -amplitude * omega * np.sin(omega * t) * ones

    eye = np.eye(dim)
    delta0 = amplitude * omega * np.sqrt(dim)
    family = ParameterizedFamily(
        param_dim=dim,
        signal=b,
        grad=lambda x, p: x - p,
        value=lambda x, p: 0.5 * float(np.sum((x - p) ** 2)),
    )
    return TVProblemOracle(
        dim=dim,
        f=lambda x, t: 0.5 * float(np.sum((x - b(t)) ** 2)),
        grad=lambda x, t: x - b(t),
        hessian=lambda x, t: eye,
        time_grad=lambda x, t: -b_dot(t),
        profile=ConvexityProfile(m=1.0, L=1.0),
        drift=DriftBounds(delta0=delta0),
        reference_solution=b,
        family=family,
        name=f"sinusoid_quadratic(omega={omega:g}, dim={dim})",
    )


def _default_tracking_signal():
    def b(t):
        return np.array([3.0 * np.cos(0.5 * t), 0.1 + 2.0 * np.sin(0.5 * t)])

    def b_dot(t):
        return np.array([-1.5 * np.sin(0.5 * t), np.cos(0.5 * t)])

    return b, b_dot


def make_robot_tracking(lam, b_signal=None, b_dot_signal=None):
    """Sparse tracking of a moving target.

    Smooth part ||x - b(t)||^2 plus an l1 penalty of weight ``lam``; the
    optimizer is the coordinatewise soft threshold of b(t) at lam/2.
    When a custom signal is passed without its derivative, the solvers
    fall back to finite differencing in time.
    """
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    if b_signal is None:
        b_signal, b_dot_signal = _default_tracking_signal()
    dim = np.atleast_1d(np.asarray(b_signal(0.0), dtype=float)).shape[0]
    eye2 = 2.0 * np.eye(dim)

    def b(t):
        return np.atleast_1d(np.asarray(b_signal(t), dtype=float))

    time_grad = None
    if b_dot_signal is not None:
        def time_grad(x, t):
            return -2.0 * np.atleast_1d(np.asarray(b_dot_signal(t), dtype=float))

    return TVProblemOracle(
        dim=dim,
        f=lambda x, t: float(np.sum((x - b(t)) ** 2)),
        grad=lambda x, t: 2.0 * (x - b(t)),
        hessian=lambda x, t: eye2,
        time_grad=time_grad,
        regularizer=L1Norm(lam) if lam > 0 else None,
        profile=ConvexityProfile(m=2.0, L=2.0),
        reference_solution=lambda t: soft_threshold(b(t), lam / 2.0),
        name=f"robot_tracking(lam={lam:g})",
    )


# --- power grid fleet management ---


def default_power_signals(seed=0, n_uncontrolled=3, noise_amplitude=0.1,
                          noise_bucket=10.0):
    """Synthetic reference and uncontrollable-power signals.

    Slowly varying sums of sinusoids plus a small uniform noise term
    held constant over ``noise_bucket``-second buckets, all drawn from
    the given seed so runs are reproducible.
    """
    rng = np.random.default_rng(seed)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=(n_uncontrolled, 2))
    noise = rng.uniform(-noise_amplitude, noise_amplitude,
                        size=(n_uncontrolled, 8192))

    def y_ref(t):
        return (500.0 + 80.0 * np.sin(2.0 * np.pi * t / 3600.0)
                + 20.0 * np.sin(2.0 * np.pi * t / 600.0 + 0.7))

    def w(t):
        bucket = int(abs(t) // noise_bucket) % noise.shape[1]
        out = np.empty(n_uncontrolled)
        for j in range(n_uncontrolled):
            out[j] = (100.0
                      + 15.0 * np.sin(2.0 * np.pi * t / 2400.0 + phases[j, 0])
                      + 5.0 * np.sin(2.0 * np.pi * t / 480.0 + phases[j, 1])
                      + noise[j, bucket])
        return out

    return y_ref, w


@dataclass(frozen=True)
class PowerGridProblem:
    """Fleet of power setpoints tracking a network reference.

    Each of the N units contributes a 2-vector (active, reactive power)
    constrained to a box; a quadratic network term weighs the mismatch
    between the reference signal and the aggregate sensitivity output.
    """

    N: int
    box_limit: float
    gamma: float
    A_x: np.ndarray
    A_w: np.ndarray
    w: Callable
    y_ref: Callable

    @property
    def dim(self):
        return 2 * self.N

    def smoothness(self):
        return 1.0 + self.gamma * float(self.A_x @ self.A_x)

    def y_effective(self, t):
        return float(self.y_ref(t)) - float(self.A_w @ np.atleast_1d(self.w(t)))

    def oracle(self):
        n = self.dim
        gamma = self.gamma
        a_x = self.A_x
        hess = np.eye(n) + gamma * np.outer(a_x, a_x)
        box = Box(lo=np.full(n, -self.box_limit), hi=np.full(n, self.box_limit))

        def lin(t):
            return -gamma * a_x * self.y_effective(t)

        def grad(x, t):
            return hess @ x + lin(t)

        def value(x, t):
            mismatch = self.y_effective(t) - float(a_x @ x)
            return 0.5 * float(x @ x) + 0.5 * gamma * mismatch ** 2

        return TVProblemOracle(
            dim=n,
            f=value,
            grad=grad,
            hessian=lambda x, t: hess,
            time_grad=None,  # solvers must use the backward difference
            constraint_set=box,
            profile=ConvexityProfile(m=1.0, L=self.smoothness()),
            quad_box=QuadraticBoxStructure(hess=hess, lin=lin, box=box),
            name=f"power_grid(N={self.N})",
        )


def make_power_grid(N=5, box_limit=50.0, gamma=2.0, w_signal=None,
                    y_ref_signal=None, target_L=21.0, seed=0):
    """Power-fleet benchmark with the sensitivity row scaled for target L.

    The sensitivity row is a scaled all-ones pattern with
    ||A_x||^2 = (target_L - 1) / gamma, so the cost has m = 1 and
    L = target_L regardless of fleet size.
    """
    if N < 1:
        raise ValueError("need at least one controllable unit")
    if target_L <= 1.0:
        raise ValueError("target smoothness must exceed 1")
    default_y, default_w = default_power_signals(seed=seed)
    y_ref = y_ref_signal if y_ref_signal is not None else default_y
    w = w_signal if w_signal is not None else default_w
    n_w = np.atleast_1d(np.asarray(w(0.0), dtype=float)).shape[0]
    scale = np.sqrt((target_L - 1.0) / (gamma * 2 * N))
    problem = PowerGridProblem(
        N=N,
        box_limit=box_limit,
        gamma=gamma,
        A_x=scale * np.ones(2 * N),
        A_w=np.ones(n_w),
        w=lambda t: np.atleast_1d(np.asarray(w(t), dtype=float)),
        y_ref=y_ref,
    )
    return problem
