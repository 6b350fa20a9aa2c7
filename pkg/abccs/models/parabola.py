"""
Normal parabola: y_1..y_n i.i.d. N(theta, theta^2), theta > 0.

The full likelihood is tractable, so the composite likelihood is the full
one and the rescaled score summary reduces to
eta(y) = theta_obs * score(theta_obs; y) / sqrt(3n).
"""

import logging

import numpy as np
from scipy.integrate import trapezoid

from abccs.estimating import godambe_estimate
from abccs.models.base import (DensityTable, DomainError, Model, Summary,
                               UniformPrior)
from abccs.numkernel import as_generator


log = logging.getLogger(__name__)


def _check(theta):
    theta = np.asarray(theta, dtype=float)
    if np.any(theta <= 0):
        raise DomainError('Normal parabola requires theta > 0!')
    return theta


def _stats(y):
    y = np.asarray(y, dtype=float)
    return y.shape[-1], y.sum(axis=-1), (y * y).sum(axis=-1)


def loglik(theta, y):
    theta = _check(theta)
    n, s1, s2 = _stats(y)
    return s1 / theta - s2 / (2 * theta ** 2) - n * np.log(theta)


def score(theta, y):
    theta = _check(theta)
    n, s1, s2 = _stats(y)
    return -s1 / theta ** 2 + s2 / theta ** 3 - n / theta


def info(theta, n):
    return 3.0 * n / _check(theta) ** 2


def mle(y):
    n, s1, s2 = _stats(y)
    return (-s1 + np.sqrt(s1 * s1 + 4 * n * s2)) / (2 * n)


def suffstat(y):
    _, s1, s2 = _stats(y)
    return np.stack([s1, s2], axis=-1)


def mean_sd(y):
    y = np.asarray(y, dtype=float)
    return np.stack([y.mean(axis=-1), y.std(axis=-1, ddof=1)], axis=-1)


def rescaled_score(theta_obs, y):
    n = np.shape(y)[-1]
    return theta_obs * score(theta_obs, y) / np.sqrt(3.0 * n)


def exact_posterior(y, prior=None, grid_size=4096):
    """Posterior density on a uniform grid covering the prior support."""
    prior = prior or UniformPrior(0.0, 15.0)
    grid = np.linspace(prior.lower[0], prior.upper[0], grid_size)

    logpost = np.full(grid_size, -np.inf)
    inside = prior.in_support(grid[:, None]) & (grid > 0)
    logpost[inside] = (loglik(grid[inside], y) +
                       prior.logpdf(grid[inside][:, None]))

    density = np.exp(logpost - logpost.max())
    density /= trapezoid(density, grid)

    return DensityTable(grid, density)


class NormalParabola(Model):
    name = 'normal-parabola'
    names = ('theta',)
    batched = True
    sampler = 'reject'
    score_distance = 'l1'
    summaries = {'abc-suffstat': ('suffstat', 'l1'),
                 'abc-t1': ('t1', 'l1')}

    def __init__(self, n=50, prior=None):
        Model.__init__(self, prior or UniformPrior(0.0, 15.0))
        self.n = int(n)

        if self.n < 2:
            raise ValueError('Normal parabola needs n >= 2.')

    def simulate(self, theta, rng):
        theta = float(_check(theta)[0])
        return theta + theta * as_generator(rng).standard_normal(self.n)

    def simulate_batch(self, thetas, rng):
        thetas = _check(np.asarray(thetas, dtype=float)[:, :1])
        z = as_generator(rng).standard_normal((thetas.shape[0], self.n))
        return thetas + thetas * z

    def pairwise_loglik(self, theta, y):
        return loglik(theta[0], y)

    def pairwise_score(self, theta, y):
        return np.expand_dims(score(theta[0], y), -1)

    loglik = pairwise_loglik

    def full(self):
        return self.composite()

    def initial(self, y):
        return np.array([mle(y)])

    def exact_godambe(self, theta):
        i = info(theta[0], self.n)
        return godambe_estimate(theta, [[i]], [[i]])

    def exact_posterior(self, y, grid_size=4096):
        return exact_posterior(y, self.prior, grid_size)

    def summary(self, kind):
        if kind == 'suffstat':
            return Summary(kind, suffstat, suffstat)
        if kind == 't1':
            return Summary(kind, mean_sd, mean_sd)
        return Model.summary(self, kind)

    def describe(self):
        return dict(Model.describe(self), n=self.n)
