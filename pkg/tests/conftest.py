import numpy as np
import pytest

from abccs.models import Equicorr, Model, NormalParabola, NormalPrior, Probit
from abccs.numkernel import RngStream, as_generator


class GaussianMean(Model):
    """y_1..y_n i.i.d. N(theta, 1); the composite likelihood is the full one."""

    name = 'gaussian-mean'
    names = ('theta',)
    batched = True

    def __init__(self, n=20):
        Model.__init__(self, NormalPrior([0.0], 100.0))
        self.n = n

    def simulate(self, theta, rng):
        return theta[0] + as_generator(rng).standard_normal(self.n)

    def simulate_batch(self, thetas, rng):
        z = as_generator(rng).standard_normal((len(thetas), self.n))
        return np.asarray(thetas)[:, :1] + z

    def pairwise_loglik(self, theta, y):
        return -0.5 * ((np.asarray(y) - theta[0]) ** 2).sum(axis=-1)

    def pairwise_score(self, theta, y):
        return np.expand_dims((np.asarray(y) - theta[0]).sum(axis=-1), -1)

    loglik = pairwise_loglik

    def initial(self, y):
        return np.array([np.mean(y)])


@pytest.fixture
def stream():
    return RngStream(20240601, 0)


@pytest.fixture
def gen():
    return RngStream(7, 0).generator()


@pytest.fixture
def gaussian():
    return GaussianMean(20)


@pytest.fixture
def parabola():
    return NormalParabola(50)


@pytest.fixture
def equicorr():
    return Equicorr(n=30, q=5)


@pytest.fixture
def probit():
    return Probit(n=30, q=4, seed=11)


def random_spd(gen, d):
    a = gen.standard_normal((d, d))
    return a @ a.T + d * np.eye(d)
