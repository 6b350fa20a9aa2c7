import logging

from collections import namedtuple

import numpy as np
from scipy.integrate import trapezoid
from scipy.stats import norm

from abccs.estimating import CompositeLikelihood
from abccs.numkernel import as_generator


log = logging.getLogger(__name__)


class DomainError(ValueError):
    pass


def _rows(theta):
    return np.atleast_2d(np.asarray(theta, dtype=float))


def _squeeze(values, theta):
    return values[0] if np.ndim(theta) <= 1 else values


class UniformPrior(namedtuple('UniformPrior', 'lower upper')):
    """Independent uniform components; infinite bounds make it improper."""

    def __new__(cls, lower, upper):
        lower = np.atleast_1d(np.asarray(lower, dtype=float))
        upper = np.atleast_1d(np.asarray(upper, dtype=float))

        if lower.shape != upper.shape or np.any(lower >= upper):
            raise ValueError('Invalid uniform prior bounds!')

        return super(UniformPrior, cls).__new__(cls, lower, upper)

    @property
    def proper(self):
        return bool(np.all(np.isfinite(self.lower)) and
                    np.all(np.isfinite(self.upper)))

    def in_support(self, theta):
        t = _rows(theta)
        inside = np.all((t > self.lower) & (t < self.upper), axis=1)
        return _squeeze(inside, theta)

    def logpdf(self, theta):
        if self.proper:
            density = -np.log(self.upper - self.lower).sum()
        else:
            density = 0.0
        values = np.where(self.in_support(_rows(theta)), density, -np.inf)
        return _squeeze(values, theta)

    def sample(self, rng, m):
        if not self.proper:
            raise NotImplementedError('Cannot sample from an improper prior.')
        gen = as_generator(rng)
        return gen.uniform(self.lower, self.upper, (m, self.lower.shape[0]))


class NormalPrior(namedtuple('NormalPrior', 'mean var')):
    def __new__(cls, mean, var):
        mean = np.atleast_1d(np.asarray(mean, dtype=float))
        var = np.broadcast_to(np.asarray(var, dtype=float), mean.shape).copy()

        if np.any(var <= 0):
            raise ValueError('Prior variances must be positive!')

        return super(NormalPrior, cls).__new__(cls, mean, var)

    proper = True

    def in_support(self, theta):
        t = _rows(theta)
        return _squeeze(np.all(np.isfinite(t), axis=1), theta)

    def logpdf(self, theta):
        t = _rows(theta)
        values = norm.logpdf(t, self.mean, np.sqrt(self.var)).sum(axis=1)
        return _squeeze(values, theta)

    def sample(self, rng, m):
        gen = as_generator(rng)
        return self.mean + np.sqrt(self.var) * gen.standard_normal(
            (m, self.mean.shape[0]))


class DensityTable(namedtuple('DensityTable', 'grid density')):
    """A univariate density tabulated on an increasing grid."""

    def mean(self):
        return trapezoid(self.grid * self.density, self.grid)

    def sd(self):
        m = self.mean()
        return np.sqrt(trapezoid((self.grid - m) ** 2 * self.density,
                                 self.grid))

    def mode(self):
        return self.grid[np.argmax(self.density)]

    def weights(self):
        w = self.density * np.gradient(self.grid)
        return w / w.sum()


class Summary(object):
    """A named summary statistic with an optional vectorised form."""

    def __init__(self, name, func, batch=None):
        self.name = name
        self.func = func
        if batch is not None:
            self.batch = batch

    def __call__(self, y):
        return np.atleast_1d(np.asarray(self.func(y), dtype=float))

    def __repr__(self):
        return 'Summary(%r)' % self.name


class Model(object):
    """
    Common interface of the built-in models. Parameters are plain float
    arrays ordered as in `names`.

    Subclasses set `name`, `names`, `prior`, implement `simulate`,
    `pairwise_loglik` and `initial`, and may provide `pairwise_score`,
    `loglik`, `simulate_batch` (with `batched = True`) and `exact_godambe`.
    """

    name = None
    names = ()
    batched = False
    sampler = 'importance'
    score_distance = 'euclidean'
    pairwise_score = None
    loglik = None

    # method -> (summary kind, distance kind)
    summaries = {}

    def __init__(self, prior):
        self.prior = prior

    @property
    def dim(self):
        return len(self.names)

    def check_theta(self, theta):
        theta = np.atleast_1d(np.asarray(theta, dtype=float))

        if theta.shape != (self.dim,):
            raise DomainError('%s expects %d parameters, got %d.' %
                              (self.name, self.dim, theta.size))
        if not self.prior.in_support(theta):
            raise DomainError('Parameter %r outside the support of %s.' %
                              (theta.tolist(), self.name))

        return theta

    def simulate(self, theta, rng):
        raise NotImplementedError

    def simulate_batch(self, thetas, rng):
        gen = as_generator(rng)
        return np.stack([self.simulate(theta, gen) for theta in thetas])

    def pairwise_loglik(self, theta, y):
        raise NotImplementedError

    def initial(self, y):
        raise NotImplementedError

    def exact_godambe(self, theta):
        return None

    def composite(self):
        return CompositeLikelihood(self.pairwise_loglik, self.pairwise_score,
                                   self.dim, self.batched)

    def full(self):
        if self.loglik is None:
            return None
        return CompositeLikelihood(self.loglik, None, self.dim, self.batched)

    def summary(self, kind):
        raise NotImplementedError('%s has no %r summary.' % (self.name, kind))

    def describe(self):
        return {'model': self.name, 'parameters': list(self.names)}
