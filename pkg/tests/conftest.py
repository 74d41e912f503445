import numpy as np
import pytest

from tvtrack import kernels
from tvtrack.problems import ConvexityProfile, TVProblemOracle


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    # jit compilation happens once here, not inside timed tests
    kernels.warmup()


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def make_static_quadratic(center, m=1.0, L=None, dim=None):
    """0.5 (x-center)' D (x-center) with eigenvalues spread in [m, L]."""
    center = np.atleast_1d(np.asarray(center, dtype=float))
    dim = dim or center.shape[0]
    L = L if L is not None else m
    diag = np.linspace(m, L, dim) if dim > 1 else np.array([m])
    D = np.diag(diag)

    def f(x, t):
        d = x - center
        return 0.5 * float(d @ D @ d)

    return TVProblemOracle(
        dim=dim,
        f=f,
        grad=lambda x, t: D @ (x - center),
        hessian=lambda x, t: D,
        time_grad=lambda x, t: np.zeros(dim),
        profile=ConvexityProfile(m=m, L=L),
        reference_solution=lambda t: center,
        name="static_quadratic",
    )


class RecordingOracle:
    """Wrap an oracle and record every time stamp it is queried at."""

    def __init__(self, oracle):
        self._oracle = oracle
        self.queried_times = []

    def __getattr__(self, name):
        return getattr(self._oracle, name)

    def _record(self, t):
        self.queried_times.append(float(t))

    def eval_f(self, x, t):
        self._record(t)
        return self._oracle.eval_f(x, t)

    def eval_grad(self, x, t):
        self._record(t)
        return self._oracle.eval_grad(x, t)

    def eval_hessian(self, x, t):
        self._record(t)
        return self._oracle.eval_hessian(x, t)

    def eval_time_grad(self, x, t):
        self._record(t)
        return self._oracle.eval_time_grad(x, t)

    def max_queried(self):
        return max(self.queried_times)
