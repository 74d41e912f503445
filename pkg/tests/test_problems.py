import numpy as np
import pytest

from tvtrack.exceptions import InsufficientHistoryError, UnsupportedOperationError
from tvtrack.problems import (
    ConvexityProfile,
    DriftBounds,
    TimeGrid,
    TVProblemOracle,
    finite_diff_time_grad,
)
from tvtrack.regularizers import L1Norm
from tvtrack.sets import Box


def _drifting_quadratic(target):
    # f(x; t) = 0.5 (x - target(t))^2 in one dimension
    return TVProblemOracle(
        dim=1,
        f=lambda x, t: 0.5 * float((x[0] - target(t)) ** 2),
        grad=lambda x, t: x - target(t),
        hessian=lambda x, t: np.eye(1),
        profile=ConvexityProfile(1.0, 1.0),
    )


def test_time_grid():
    grid = TimeGrid(h=0.5, k_max=4, t0=1.0)
    np.testing.assert_allclose(grid.times(), [1.0, 1.5, 2.0, 2.5, 3.0])
    assert grid.time(3) == pytest.approx(2.5)
    with pytest.raises(ValueError):
        TimeGrid(h=0.0, k_max=4)
    with pytest.raises(ValueError):
        TimeGrid(h=0.1, k_max=0)


def test_convexity_profile_validation():
    ConvexityProfile(1.0, 21.0)
    with pytest.raises(ValueError):
        ConvexityProfile(0.0, 1.0)
    with pytest.raises(ValueError):
        ConvexityProfile(2.0, 1.0)


def test_drift_bounds():
    d = DriftBounds(delta0=1.0)
    assert d.step_bound(h=0.1, m=1.0) == pytest.approx(0.1)
    # explicit K must be consistent with delta0 * h / m
    ok = DriftBounds(K=0.05, delta0=1.0)
    assert ok.step_bound(h=0.1, m=1.0) == pytest.approx(0.05)
    with pytest.raises(ValueError):
        DriftBounds(K=0.5, delta0=1.0).step_bound(h=0.1, m=1.0)
    with pytest.raises(ValueError):
        DriftBounds(K=-1.0)


def test_finite_diff_linear_drift_is_exact():
    oracle = _drifting_quadratic(lambda t: t)
    # gradient is x - t, so the backward difference equals -1 exactly
    out = finite_diff_time_grad(oracle, np.array([0.7]), t_k=0.3, h=0.1)
    assert out == pytest.approx(-1.0, abs=1e-12)


def test_finite_diff_time_invariant_is_zero():
    oracle = _drifting_quadratic(lambda t: 2.0)
    out = finite_diff_time_grad(oracle, np.array([0.7]), t_k=0.3, h=0.1)
    assert out == pytest.approx(0.0, abs=1e-15)


def test_finite_diff_cosine_scalar_value():
    # (grad f(0; 0.1) - grad f(0; 0)) / 0.1 = (cos 0 - cos 0.1)/0.1
    oracle = _drifting_quadratic(np.cos)
    out = finite_diff_time_grad(oracle, np.array([0.0]), t_k=0.1, h=0.1)
    expected = (np.cos(0.0) - np.cos(0.1)) / 0.1
    assert expected == pytest.approx(0.04995834721974181)
    assert out == pytest.approx(expected, abs=1e-15)


def test_finite_diff_requires_history():
    oracle = _drifting_quadratic(np.cos)
    with pytest.raises(InsufficientHistoryError):
        finite_diff_time_grad(oracle, np.array([0.0]), t_k=0.0, h=0.1)


def test_oracle_rejects_double_nonsmooth():
    with pytest.raises(ValueError):
        TVProblemOracle(
            dim=1,
            f=lambda x, t: 0.0,
            grad=lambda x, t: np.zeros(1),
            hessian=lambda x, t: np.eye(1),
            profile=ConvexityProfile(1.0, 1.0),
            regularizer=L1Norm(1.0),
            constraint_set=Box(lo=[-1.0], hi=[1.0]),
        )


def test_oracle_time_grad_flag():
    oracle = _drifting_quadratic(np.cos)
    assert not oracle.has_time_grad
    with pytest.raises(UnsupportedOperationError):
        oracle.eval_time_grad(np.zeros(1), 0.0)


def test_time_varying_constraint_set_sampling():
    def moving_box(t):
        return Box(lo=[-1.0 - t], hi=[1.0 + t])

    oracle = TVProblemOracle(
        dim=1,
        f=lambda x, t: 0.5 * float(x[0] ** 2),
        grad=lambda x, t: x,
        hessian=lambda x, t: np.eye(1),
        profile=ConvexityProfile(1.0, 1.0),
        constraint_set=moving_box,
    )
    assert oracle.constraint_set_at(0.0).hi[0] == pytest.approx(1.0)
    assert oracle.constraint_set_at(2.0).hi[0] == pytest.approx(3.0)
