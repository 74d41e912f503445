import numpy as np
import pytest

from conftest import RecordingOracle, make_static_quadratic
from tvtrack.benchmarks import make_sinusoid_quadratic
from tvtrack.exceptions import (
    ExhaustedStreamError,
    ModelConstructionError,
    NumericalError,
)
from tvtrack.metrics import loglog_slope
from tvtrack.predictors import (
    HintStream,
    KalmanModel,
    QuadraticModel,
    build_taylor_model,
    hint_gradient,
    kalman_predict,
    predict_by_parameter,
    predict_composite,
    predict_unconstrained,
)
from tvtrack.problems import ConvexityProfile, TVProblemOracle
from tvtrack.regularizers import SetIndicator
from tvtrack.sets import Box


def _drifting(target, target_dot):
    return TVProblemOracle(
        dim=1,
        f=lambda x, t: 0.5 * float((x[0] - target(t)) ** 2),
        grad=lambda x, t: x - target(t),
        hessian=lambda x, t: np.eye(1),
        time_grad=lambda x, t: np.array([-target_dot(t)]),
        profile=ConvexityProfile(1.0, 1.0),
        reference_solution=lambda t: np.array([target(t)]),
    )


# --- model construction ---

def test_taylor_model_linear_drift():
    oracle = _drifting(lambda t: t, lambda t: 1.0)
    model = build_taylor_model(oracle, [0.0], t_k=0.0, h=0.1)
    assert model.g0 == pytest.approx(0.0)
    assert model.hess[0, 0] == pytest.approx(1.0)
    assert model.time_term == pytest.approx(-0.1)


def test_taylor_model_time_invariant():
    oracle = make_static_quadratic(np.array([1.0, 2.0]), m=1.0, L=3.0)
    model = build_taylor_model(oracle, [0.0, 0.0], t_k=1.0, h=0.1)
    np.testing.assert_allclose(model.time_term, np.zeros(2))


def test_taylor_model_cosine_at_peak():
    oracle = _drifting(np.cos, lambda t: -np.sin(t))
    model = build_taylor_model(oracle, [1.0], t_k=0.0, h=0.1)
    assert model.g0 == pytest.approx(0.0)
    # time term is h * sin(0) = 0
    assert model.time_term == pytest.approx(0.0)


def test_taylor_model_finite_difference_fallback():
    # without an analytic handle the backward difference is substituted
    oracle = TVProblemOracle(
        dim=1,
        f=lambda x, t: 0.5 * float((x[0] - t) ** 2),
        grad=lambda x, t: x - t,
        hessian=lambda x, t: np.eye(1),
        profile=ConvexityProfile(1.0, 1.0),
    )
    model = build_taylor_model(oracle, [0.0], t_k=0.2, h=0.1)
    assert model.time_term == pytest.approx(-0.1, abs=1e-12)
    # first sample has no history: the time term degrades to zero
    model0 = build_taylor_model(oracle, [0.0], t_k=0.0, h=0.1)
    assert model0.time_term == pytest.approx(0.0)


def test_taylor_model_rejects_indefinite_hessian():
    oracle = TVProblemOracle(
        dim=2,
        f=lambda x, t: 0.0,
        grad=lambda x, t: np.zeros(2),
        hessian=lambda x, t: np.diag([1.0, -1.0]),
        profile=ConvexityProfile(1.0, 1.0),
    )
    with pytest.raises(ModelConstructionError):
        build_taylor_model(oracle, [0.0, 0.0], t_k=0.0, h=0.1)


def test_model_gradient_is_affine(rng):
    H = np.array([[2.0, 0.3], [0.3, 1.0]])
    model = QuadraticModel(anchor=np.array([1.0, -1.0]),
                           g0=np.array([0.5, 0.2]),
                           hess=H,
                           time_term=np.array([0.1, -0.1]))
    # value at the anchor and constant slope everywhere
    np.testing.assert_allclose(model.grad(model.anchor),
                               model.g0 + model.time_term)
    for _ in range(10):
        x, y = rng.normal(size=2), rng.normal(size=2)
        np.testing.assert_allclose(model.grad(x) - model.grad(y),
                                   H @ (x - y), atol=1e-12)


# --- prediction ---

def test_predict_unconstrained_linear_drift_exact():
    oracle = _drifting(lambda t: t, lambda t: 1.0)
    t_k = 0.7
    model = build_taylor_model(oracle, [t_k], t_k=t_k, h=0.1)
    pred = predict_unconstrained(model)
    assert pred == pytest.approx(t_k + 0.1, abs=1e-12)


def test_predict_unconstrained_static_returns_anchor():
    oracle = make_static_quadratic(np.array([2.0]))
    model = build_taylor_model(oracle, [2.0], t_k=0.0, h=0.1)
    assert predict_unconstrained(model) == pytest.approx(2.0)


def test_prediction_error_order_h_squared():
    # exact model solve on a cosine target: one-step error is O(h^2)
    oracle = _drifting(np.cos, lambda t: -np.sin(t))
    hs = [0.1, 0.05, 0.025, 0.0125]
    t_k = 0.9
    errs = []
    for h in hs:
        model = build_taylor_model(oracle, [np.cos(t_k)], t_k=t_k, h=h)
        pred = predict_unconstrained(model)
        errs.append(abs(float(pred[0]) - np.cos(t_k + h)))
    slope = loglog_slope(hs, errs)
    assert 1.8 <= slope <= 2.2


def test_predict_unconstrained_rejects_ill_conditioned():
    model = QuadraticModel(anchor=np.zeros(2), g0=np.ones(2),
                           hess=np.diag([1.0, 1e-14]),
                           time_term=np.zeros(2))
    with pytest.raises(NumericalError):
        predict_unconstrained(model)


def test_predict_composite_converges_to_linear_solve():
    H = np.array([[1.5, 0.2], [0.2, 1.0]])
    model = QuadraticModel(anchor=np.array([0.0, 0.0]),
                           g0=np.array([1.0, -0.5]),
                           hess=H,
                           time_term=np.array([0.05, 0.05]))
    exact = predict_unconstrained(model)
    out = predict_composite(model, None, P=300, alpha=0.5)
    assert np.linalg.norm(out - exact) <= 1e-8


def test_predict_composite_contracts_geometrically():
    model = QuadraticModel(anchor=np.array([0.0]), g0=np.array([1.0]),
                           hess=np.eye(1), time_term=np.array([0.0]))
    root = predict_unconstrained(model)
    rho = 0.5  # |1 - alpha * H| with alpha = 0.5
    for P in (1, 3, 6):
        out = predict_composite(model, None, P=P, alpha=0.5)
        assert np.linalg.norm(out - root) <= \
            rho ** P * np.linalg.norm(model.anchor - root) + 1e-12


def test_predict_composite_single_pass_value():
    model = QuadraticModel(anchor=np.array([0.0]), g0=np.array([0.0]),
                           hess=np.eye(1), time_term=np.array([-0.1]))
    out = predict_composite(model, None, P=1, alpha=1.0)
    assert out == pytest.approx(0.1)
    with pytest.raises(ValueError):
        predict_composite(model, None, P=0, alpha=1.0)


def test_predict_composite_projects_onto_set():
    # model root at 2 is capped to the box bound
    g = SetIndicator(Box(lo=[-1.0], hi=[1.0]))
    model = QuadraticModel(anchor=np.array([0.0]), g0=np.array([-2.0]),
                           hess=np.eye(1), time_term=np.array([0.0]))
    out = predict_composite(model, g, P=50, alpha=1.0)
    assert out == pytest.approx(1.0)


# --- causality ---

def test_taylor_prediction_is_causal():
    base = make_sinusoid_quadratic(1.0, dim=2)
    wrapped = RecordingOracle(base)
    t_k = 1.5
    model = build_taylor_model(wrapped, [0.3, -0.2], t_k=t_k, h=0.1)
    predict_composite(model, None, P=5, alpha=0.5)
    assert wrapped.max_queried() <= t_k + 1e-12


def test_finite_difference_model_is_causal():
    base = make_sinusoid_quadratic(1.0, dim=1)
    no_analytic = TVProblemOracle(
        dim=1, f=base.f, grad=base.grad, hessian=base.hessian,
        profile=base.profile,
    )
    wrapped = RecordingOracle(no_analytic)
    t_k = 2.0
    build_taylor_model(wrapped, [0.0], t_k=t_k, h=0.1)
    assert wrapped.max_queried() <= t_k + 1e-12


# --- parameter filtering ---

def test_kalman_constant_parameter_exact():
    km = KalmanModel(trans=np.eye(1), obs=np.eye(1),
                     proc_cov=np.zeros((1, 1)), obs_cov=np.zeros((1, 1)),
                     state=np.array([4.0]))
    # noiseless observations of a constant parameter stay at its value
    for _ in range(3):
        forecast, km = kalman_predict(km, np.array([4.0]))
        assert forecast == pytest.approx(4.0)


def test_kalman_scalar_full_gain():
    # R -> 0 with positive prior variance gives unit gain
    km = KalmanModel(trans=np.array([[2.0]]), obs=np.array([[1.0]]),
                     proc_cov=np.zeros((1, 1)), obs_cov=np.zeros((1, 1)),
                     state=np.array([1.0]), cov=np.eye(1))
    forecast, km = kalman_predict(km, np.array([3.0]))
    assert forecast == pytest.approx(6.0)  # transition applied to posterior 3


def test_kalman_zero_observation_matrix():
    km = KalmanModel(trans=np.array([[2.0]]), obs=np.array([[0.0]]),
                     proc_cov=np.zeros((1, 1)), obs_cov=np.eye(1),
                     state=np.array([1.5]), cov=np.eye(1))
    forecast, km = kalman_predict(km, np.array([99.0]))
    assert forecast == pytest.approx(3.0)  # posterior equals the prior


def test_kalman_singular_innovation_raises():
    km = KalmanModel(trans=np.eye(1), obs=np.array([[0.0]]),
                     proc_cov=np.zeros((1, 1)), obs_cov=np.zeros((1, 1)),
                     state=np.array([0.0]), cov=np.eye(1))
    with pytest.raises(NumericalError):
        kalman_predict(km, np.array([0.0]))


def test_kalman_default_covariance_is_identity():
    km = KalmanModel(trans=np.eye(2), obs=np.eye(2),
                     proc_cov=np.zeros((2, 2)), obs_cov=np.eye(2),
                     state=np.zeros(2))
    np.testing.assert_allclose(km.cov, np.eye(2))


def test_predict_by_parameter_exact_forecast():
    oracle = make_sinusoid_quadratic(1.0, dim=2)
    t_next = 0.6
    b_next = oracle.family.param_at(t_next)
    out = predict_by_parameter(oracle, b_next, budget=200, alpha=0.5,
                               x_start=np.zeros(2), t_next=t_next)
    np.testing.assert_allclose(out, oracle.reference_at(t_next), atol=1e-9)


def test_predict_by_parameter_single_pass():
    oracle = make_sinusoid_quadratic(0.0, amplitude=2.0, dim=1)
    out = predict_by_parameter(oracle, np.array([2.0]), budget=1, alpha=0.5,
                               x_start=np.zeros(1), t_next=0.1)
    assert out == pytest.approx(1.0)  # one contraction toward the forecast


def test_predict_by_parameter_biased_forecast():
    oracle = make_sinusoid_quadratic(0.0, amplitude=1.0, dim=1)
    eps = 0.25
    out = predict_by_parameter(oracle, np.array([1.0 + eps]), budget=400,
                               alpha=0.5, x_start=np.zeros(1), t_next=0.0)
    assert abs(float(out[0]) - oracle.reference_at(0.0)[0]) == \
        pytest.approx(eps, abs=1e-9)


# --- hints ---

def test_hint_stream_entries():
    hints = HintStream(hints=[np.zeros(2), np.ones(2)], dim=2)
    m0 = hint_gradient(hints, 0)
    np.testing.assert_allclose(m0(np.array([5.0, 5.0])), np.zeros(2))
    with pytest.raises(ExhaustedStreamError):
        hints.entry(2)


def test_zero_hint_stream_is_unbounded():
    hints = HintStream.zero(3)
    np.testing.assert_allclose(hints.entry(10 ** 6), np.zeros(3))
