import numpy as np
import pytest

from conftest import make_static_quadratic
from tvtrack.benchmarks import make_robot_tracking, make_sinusoid_quadratic
from tvtrack.correctors import (
    contraction_factor,
    corrector_step,
    default_alpha,
    projected_gradient_step,
    proximal_gradient_step,
)
from tvtrack.problems import ConvexityProfile
from tvtrack.regularizers import L1Norm, SetIndicator
from tvtrack.sets import Box


def _quad_1d(center):
    return make_static_quadratic(np.array([center]))


def test_projected_gradient_step_values():
    oracle = _quad_1d(1.0)
    # 0 - 0.5 * (0 - 1) = 0.5
    assert projected_gradient_step(oracle, None, [0.0], 0.0, 0.5) == \
        pytest.approx(0.5)
    # alpha = 1/L lands on the minimizer when m = L
    assert projected_gradient_step(oracle, None, [0.0], 0.0, 1.0) == \
        pytest.approx(1.0)
    box = Box(lo=[-1.0], hi=[0.2])
    assert projected_gradient_step(oracle, box, [0.0], 0.0, 1.0) == \
        pytest.approx(0.2)


def test_proximal_gradient_step_values():
    oracle = _quad_1d(2.0)
    # g = 0: identical to the unprojected gradient step
    plain = projected_gradient_step(oracle, None, [0.0], 0.0, 0.5)
    assert proximal_gradient_step(oracle, None, [0.0], 0.0, 0.5) == \
        pytest.approx(plain[0])
    # soft-threshold of the forward step 0 - 0.5*(0-2) = 1 at 0.5
    assert proximal_gradient_step(oracle, L1Norm(1.0), [0.0], 0.0, 0.5) == \
        pytest.approx(0.5)
    # indicator: clamp of the exact minimizer 2
    g = SetIndicator(Box(lo=[-1.0], hi=[1.0]))
    assert proximal_gradient_step(oracle, g, [0.0], 0.0, 1.0) == \
        pytest.approx(1.0)


def test_contraction_factor_values():
    assert contraction_factor(ConvexityProfile(1.0, 1.0), 1.0) == \
        pytest.approx(0.0)
    # power-grid profile with alpha = 1/(10 L)
    rho = contraction_factor(ConvexityProfile(1.0, 21.0), 1.0 / 210.0)
    assert rho == pytest.approx(209.0 / 210.0)
    # optimal step: (L - m) / (L + m)
    prof = ConvexityProfile(2.0, 10.0)
    assert contraction_factor(prof, default_alpha(prof)) == \
        pytest.approx((10.0 - 2.0) / (10.0 + 2.0))
    assert contraction_factor(prof, 2.0 / prof.L) == pytest.approx(1.0)


def test_static_contraction_ratio(rng):
    # frozen-time iteration must contract at least as fast as the factor
    cases = [
        (make_sinusoid_quadratic(1.0, dim=3), 0.5),
        (make_robot_tracking(1.0), 0.2),
        (make_static_quadratic(np.array([1.0, -2.0]), m=1.0, L=21.0), 1.0 / 210.0),
    ]
    t = 0.37
    for oracle, alpha in cases:
        rho = contraction_factor(oracle.profile, alpha)
        # fixed point of the frozen-time corrector
        x_star = np.atleast_1d(oracle.reference_at(t))
        for _ in range(20):
            x = x_star + rng.uniform(-3, 3, size=oracle.dim)
            err = np.linalg.norm(x - x_star)
            for _ in range(100):
                x = corrector_step(oracle, x, t, alpha)
                new_err = np.linalg.norm(x - x_star)
                if err < 1e-13:
                    break
                assert new_err <= rho * err + 1e-9
                err = new_err


def test_contraction_compounds_over_passes(rng):
    oracle = make_static_quadratic(np.array([0.5, -0.5]), m=1.0, L=4.0)
    alpha = default_alpha(oracle.profile)
    rho = contraction_factor(oracle.profile, alpha)
    x_star = oracle.reference_at(0.0)
    for C in (1, 2, 3, 5):
        x = np.array([3.0, 2.0])
        e0 = np.linalg.norm(x - x_star)
        for _ in range(C):
            x = corrector_step(oracle, x, 0.0, alpha)
        assert np.linalg.norm(x - x_star) <= rho ** C * e0 + 1e-9


def test_fixed_point_at_optimum():
    oracle = make_sinusoid_quadratic(1.0, dim=2)
    t = 1.3
    x_star = oracle.reference_at(t)
    out = corrector_step(oracle, x_star, t, 0.5)
    assert np.linalg.norm(out - x_star) <= 1e-12


def test_contraction_factor_rejects_bad_alpha():
    with pytest.raises(ValueError):
        contraction_factor(ConvexityProfile(1.0, 1.0), 0.0)
