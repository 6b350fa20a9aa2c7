"""
Equicorrelated multivariate normal: n independent clusters of size q with
common mean mu, variance sigma^2 and correlation rho.

Parameters are omega = (mu, tau, kappa) with tau = log sigma^2 and
kappa = logit((rho (q - 1) + 1) / q), which maps the admissible range
rho in (-1/(q - 1), 1) onto the real line.
"""

import logging

import numpy as np
from scipy.special import expit, logit

from abccs.models.base import DomainError, Model, NormalPrior, Summary
from abccs.numkernel import DecompositionError, as_generator, cholesky


log = logging.getLogger(__name__)


def to_natural(omega, q):
    """omega -> (mu, sigma^2, rho)"""
    omega = np.asarray(omega, dtype=float)
    mu, tau, kappa = omega[..., 0], omega[..., 1], omega[..., 2]
    p = expit(kappa)
    return mu, np.exp(tau), (q * p - 1) / (q - 1)


def from_natural(mu, sigma2, rho, q):
    if np.any(sigma2 <= 0):
        raise DomainError('Variance must be positive!')
    if np.any(rho <= -1.0 / (q - 1)) or np.any(rho >= 1):
        raise DomainError('Correlation %r outside (-1/(q-1), 1).' % (rho,))
    return np.stack(np.broadcast_arrays(
        mu, np.log(sigma2), logit((rho * (q - 1) + 1) / q)), axis=-1)


def natural_jacobian(omega, q):
    """Diagonal of d(mu, sigma^2, rho) / d(mu, tau, kappa)."""
    _, sigma2, _ = to_natural(omega, q)
    p = expit(np.asarray(omega, dtype=float)[..., 2])
    return np.stack(np.broadcast_arrays(
        1.0, sigma2, q * p * (1 - p) / (q - 1)), axis=-1)


def statistics(y):
    """(ybar, SS_B, SS_W) of clustered data of shape (..., n, q)."""
    y = np.asarray(y, dtype=float)
    unit = y.mean(axis=-1)
    ybar = unit.mean(axis=-1)
    ss_b = ((unit - ybar[..., None]) ** 2).sum(axis=-1)
    ss_w = ((y - unit[..., None]) ** 2).sum(axis=(-2, -1))
    return ybar, ss_b, ss_w


def suffstat(y):
    ybar, ss_b, ss_w = statistics(y)
    return np.stack([ybar, np.sqrt(ss_b), np.sqrt(ss_w)], axis=-1)


def _shape(y):
    n, q = np.shape(y)[-2:]
    if q < 2:
        raise ValueError('Clusters must have at least two members.')
    return n, q


def _check_natural(sigma2, rho, q):
    if sigma2 <= 0 or not -1.0 / (q - 1) < rho < 1:
        raise DomainError('(sigma^2, rho) = (%g, %g) outside the support.' %
                          (sigma2, rho))


def natural_pairwise_loglik(mu, sigma2, rho, y):
    n, q = _shape(y)
    _check_natural(sigma2, rho, q)
    ybar, ss_b, ss_w = statistics(y)
    N = n * q * (q - 1)
    between = q * (q - 1) * (ss_b + n * (ybar - mu) ** 2)

    return (-N / 2 * np.log(sigma2) - N / 4 * np.log(1 - rho * rho) -
            (q - 1 + rho) * ss_w / (2 * sigma2 * (1 - rho * rho)) -
            between / (2 * sigma2 * (1 + rho)))


def natural_pairwise_score(mu, sigma2, rho, y):
    n, q = _shape(y)
    _check_natural(sigma2, rho, q)
    ybar, ss_b, ss_w = statistics(y)
    N = n * q * (q - 1)
    between = q * (q - 1) * (ss_b + n * (ybar - mu) ** 2)
    r2 = 1 - rho * rho

    d_mu = N * (ybar - mu) / (sigma2 * (1 + rho))
    d_sigma2 = (-N / (2 * sigma2) +
                (q - 1 + rho) * ss_w / (2 * sigma2 ** 2 * r2) +
                between / (2 * sigma2 ** 2 * (1 + rho)))
    d_rho = (N * rho / (2 * r2) -
             ss_w / (2 * sigma2) * (1 + rho * rho + 2 * rho * (q - 1)) / r2 ** 2
             + between / (2 * sigma2 * (1 + rho) ** 2))

    return np.stack(np.broadcast_arrays(d_mu, d_sigma2, d_rho), axis=-1)


def natural_full_loglik(mu, sigma2, rho, y):
    n, q = _shape(y)
    _check_natural(sigma2, rho, q)
    ybar, ss_b, ss_w = statistics(y)
    within = sigma2 * (1 - rho)
    total = sigma2 * (1 + (q - 1) * rho)

    return (-n * (q - 1) / 2 * np.log(within) - n / 2 * np.log(total) -
            ss_w / (2 * within) - q * (ss_b + n * (ybar - mu) ** 2) /
            (2 * total))


def kappa(rho, q):
    return float(logit((rho * (q - 1) + 1) / q))


class Equicorr(Model):
    name = 'equicorr'
    names = ('mu', 'tau', 'kappa')
    batched = True
    summaries = {'abc-suffstat': ('suffstat', 'standardized')}

    def __init__(self, n=30, q=50, prior=None):
        Model.__init__(self, prior or NormalPrior([0.0] * 3, 100.0))
        self.n, self.q = int(n), int(q)

        if self.n < 1 or self.q < 2:
            raise ValueError('Equicorr needs n >= 1 and q >= 2.')

    def natural(self, omega):
        mu, sigma2, rho = to_natural(omega, self.q)
        return float(mu), float(sigma2), float(rho)

    def pairwise_loglik(self, theta, y):
        return natural_pairwise_loglik(*self.natural(theta), y=y)

    def pairwise_score(self, theta, y):
        score = natural_pairwise_score(*self.natural(theta), y=y)
        return score * natural_jacobian(theta, self.q)

    def natural_score(self, theta, y):
        return natural_pairwise_score(*self.natural(theta), y=y)

    def loglik(self, theta, y):
        return natural_full_loglik(*self.natural(theta), y=y)

    def _draw(self, mu, sigma2, rho, gen, m):
        n, q = self.n, self.q

        if rho >= 0:
            w = gen.standard_normal((m, n, 1))
            e = gen.standard_normal((m, n, q))
            return mu + np.sqrt(sigma2) * (np.sqrt(rho) * w +
                                           np.sqrt(1 - rho) * e)

        cov = sigma2 * ((1 - rho) * np.eye(q) + rho)
        try:
            L = cholesky(cov)
        except DecompositionError:
            raise DomainError('Correlation %g is not admissible for q = %d.' %
                              (rho, q))
        return mu + gen.standard_normal((m, n, q)) @ L.T

    def simulate(self, theta, rng):
        mu, sigma2, rho = self.natural(theta)
        _check_natural(sigma2, rho, self.q)
        return self._draw(mu, sigma2, rho, as_generator(rng), 1)[0]

    def simulate_batch(self, thetas, rng):
        gen = as_generator(rng)
        ys = np.empty((len(thetas), self.n, self.q))
        for i, theta in enumerate(thetas):
            mu, sigma2, rho = self.natural(theta)
            _check_natural(sigma2, rho, self.q)
            ys[i] = self._draw(mu, sigma2, rho, gen, 1)[0]
        return ys

    def initial(self, y):
        n, q = _shape(y)
        ybar, ss_b, ss_w = statistics(y)
        sigma2 = (ss_b * q + ss_w) / (n * q)
        within = ss_w / (n * (q - 1))
        rho = np.clip(1 - within / sigma2, -1.0 / (q - 1) + 1e-3, 1 - 1e-3)
        return from_natural(ybar, sigma2, rho, q)

    def summary(self, kind):
        if kind == 'suffstat':
            return Summary(kind, suffstat, suffstat)
        return Model.summary(self, kind)

    def describe(self):
        return dict(Model.describe(self), n=self.n, q=self.q)
