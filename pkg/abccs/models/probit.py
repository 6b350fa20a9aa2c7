"""
Multivariate probit with a random cluster effect.

Unit i at time h has latent S_ih = x_ih beta + sigma U_i + e_ih and
Y_ih = 1{S_ih > 0}. Parameters are theta = (beta_0, beta_1, log sigma^2).
Marginally the latent vector is normal with unit-free correlation
rho = sigma^2 / (1 + sigma^2), so every pair (h, k) contributes
log Pr(Y_ih, Y_ik) computed from the bivariate normal CDF.
"""

import logging
import threading

from functools import lru_cache

import numpy as np
from scipy.special import ndtri

from abccs.models.base import Model, NormalPrior, Summary
from abccs.numkernel import RngStream, as_generator, bvn_cdf, std_normal_cdf


log = logging.getLogger(__name__)

DESIGN_STREAM = 900000
PROBABILITY_FLOOR = 1e-300


def default_design(n, q, seed):
    """Intercept plus a U(-1, 1) covariate constant within each cluster."""
    gen = RngStream(seed, DESIGN_STREAM).generator()
    x = gen.uniform(-1.0, 1.0, n)
    design = np.empty((n, q, 2))
    design[:, :, 0] = 1.0
    design[:, :, 1] = x[:, None]
    return design


def cell_probabilities(gh, gk, rho):
    """
    Joint probabilities of (Y_h, Y_k) for standardized linear predictors,
    last axis ordered as (0, 0), (0, 1), (1, 0), (1, 1).
    """
    p11 = bvn_cdf(gh, gk, rho)
    ph, pk = std_normal_cdf(gh), std_normal_cdf(gk)
    return np.stack(np.broadcast_arrays(1 - ph - pk + p11, pk - p11,
                                        ph - p11, p11), axis=-1)


def count_summary(y):
    return np.asarray(y, dtype=float).sum(axis=-2)


class Probit(Model):
    name = 'probit'
    names = ('beta0', 'beta1', 'log_sigma2')
    batched = True
    score_distance = 'euclidean'
    summaries = {'abc-counts': ('counts', 'l1')}

    def __init__(self, n=100, q=10, design=None, seed=0, prior=None):
        Model.__init__(self, prior or NormalPrior([0.0] * 3, 100.0))
        self.n, self.q = int(n), int(q)

        if self.q < 2:
            raise ValueError('Probit needs at least two time points.')

        if design is None:
            design = default_design(self.n, self.q, seed)

        self.design = np.asarray(design, dtype=float)

        if self.design.shape != (self.n, self.q, 2):
            raise ValueError('Design must have shape (%d, %d, 2).' %
                             (self.n, self.q))

        self.pair_h, self.pair_k = np.triu_indices(self.q, k=1)
        self.floored = 0
        self._lock = threading.Lock()
        self._tables = lru_cache(maxsize=256)(self._log_cells)

    @property
    def pairs(self):
        return self.pair_h.shape[0]

    def latent(self, theta):
        beta, sigma2 = np.asarray(theta[:2], dtype=float), np.exp(theta[2])
        return beta, sigma2, sigma2 / (1 + sigma2)

    def _log_cells(self, key):
        theta = np.frombuffer(key)
        beta, sigma2, rho = self.latent(theta)
        gamma = (self.design @ beta) / np.sqrt(1 + sigma2)

        cells = cell_probabilities(gamma[:, self.pair_h],
                                   gamma[:, self.pair_k], rho)

        low = cells <= PROBABILITY_FLOOR
        if np.any(low):
            with self._lock:
                self.floored += int(low.sum())
            log.debug('%d cell probabilities floored at theta = %r',
                      int(low.sum()), theta.tolist())
            cells = np.maximum(cells, PROBABILITY_FLOOR)

        return np.log(cells)

    def log_cells(self, theta):
        """Table of log cell probabilities with shape (n, pairs, 4)."""
        theta = np.ascontiguousarray(theta, dtype=float)
        return self._tables(theta.tobytes())

    def pairwise_loglik(self, theta, y):
        table = self.log_cells(theta)
        y = np.asarray(y).astype(np.intp)
        cells = 2 * y[..., self.pair_h] + y[..., self.pair_k]
        table = np.broadcast_to(table, cells.shape + (4,))
        values = np.take_along_axis(table, cells[..., None], axis=-1)
        return values[..., 0].sum(axis=(-2, -1))

    def loglik(self, theta, y):
        if self.q != 2:
            raise NotImplementedError('Probit likelihood is tractable only '
                                      'for q = 2.')
        return self.pairwise_loglik(theta, y)

    def full(self):
        return self.composite() if self.q == 2 else None

    def _draw(self, theta, gen, m):
        beta, sigma2, _ = self.latent(theta)
        mean = self.design @ beta
        u = gen.standard_normal((m, self.n, 1))
        e = gen.standard_normal((m, self.n, self.q))
        return (mean + np.sqrt(sigma2) * u + e > 0).astype(np.int8)

    def simulate(self, theta, rng):
        return self._draw(self.check_theta(theta), as_generator(rng), 1)[0]

    def simulate_batch(self, thetas, rng):
        gen = as_generator(rng)
        return np.stack([self._draw(theta, gen, 1)[0] for theta in thetas])

    def initial(self, y):
        y = np.asarray(y, dtype=float)
        p = np.clip(y.mean(axis=1), 0.5 / self.q, 1 - 0.5 / self.q)
        X = self.design.mean(axis=1)
        gamma, *_ = np.linalg.lstsq(X, ndtri(p), rcond=None)
        # gamma = beta / sqrt(2) at sigma^2 = 1
        return np.array([gamma[0] * np.sqrt(2), gamma[1] * np.sqrt(2), 0.0])

    def summary(self, kind):
        if kind == 'counts':
            return Summary(kind, count_summary, count_summary)
        return Model.summary(self, kind)

    def describe(self):
        return dict(Model.describe(self), n=self.n, q=self.q)
