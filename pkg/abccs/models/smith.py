"""
Smith max-stable process with Gaussian storm profiles and GEV margins.

theta = (sigma11, sigma12, sigma22, mu0, mu1, mu2, lambda0, lambda1, lambda2,
xi); station k has location mu_k = X_k beta_mu and scale
lambda_k = X_k beta_lambda with X_k = (1, x_k, y_k), and a common shape xi.
"""

import logging

from collections import namedtuple

import numpy as np
from scipy.special import ndtri
from scipy.stats import genextreme

from abccs.models.base import DomainError, Model, _rows, _squeeze
from abccs.numkernel import (DecompositionError, as_generator, cholesky,
                             inverse_spd, std_normal_cdf, std_normal_pdf)


log = logging.getLogger(__name__)

GUMBEL_LIMIT = 1e-8
STORM_CHUNK = 64


def sigma_matrix(theta):
    return np.array([[theta[0], theta[1]], [theta[1], theta[2]]], dtype=float)


def is_covariance(sigma):
    return sigma[0, 0] > 0 and sigma[0, 0] * sigma[1, 1] > sigma[0, 1] ** 2


def mahalanobis(h, sigma):
    """a(h) = sqrt(h' Sigma^-1 h) for lag vectors of shape (..., 2)."""
    h = np.asarray(h, dtype=float)
    precision = inverse_spd(sigma)
    return np.sqrt(np.einsum('...i,ij,...j->...', h, precision, h))


def extremal_coeff(h, sigma):
    return 2 * std_normal_cdf(mahalanobis(h, sigma) / 2)


def pair_lags(coords):
    """Lag vectors t_k - t_l and their lengths for all pairs k < l."""
    coords = np.asarray(coords, dtype=float)
    k, l = np.triu_indices(coords.shape[0], k=1)
    lags = coords[k] - coords[l]
    return lags, np.hypot(lags[:, 0], lags[:, 1])


def _exponent(zk, zl, a):
    w = a / 2 + np.log(zl / zk) / a
    return w, a - w


def bvcdf(zk, zl, h, sigma):
    """Pr(Z(t_k) <= z_k, Z(t_l) <= z_l) for unit Frechet margins."""
    a = mahalanobis(h, sigma)

    if np.any(a <= 0):
        return np.exp(-np.maximum(1 / np.asarray(zk, dtype=float),
                                  1 / np.asarray(zl, dtype=float)))

    with np.errstate(divide='ignore', invalid='ignore'):
        w, v = _exponent(zk, zl, a)
        vk = std_normal_cdf(w) / zk
        vl = np.where(np.isinf(zl), 0.0, std_normal_cdf(v) / zl)
    return np.exp(-(vk + vl))


def pair_logdensity(zk, zl, a):
    """Log joint density of unit Frechet pairs (z_k, z_l) at Sigma-distance a."""
    w, v = _exponent(zk, zl, a)
    cw, cv = std_normal_cdf(w), std_normal_cdf(v)
    pw, pv = std_normal_pdf(w), std_normal_pdf(v)

    exponent = -(cw / zk + cv / zl)
    b = cw / zk ** 2 + pw / (a * zk ** 2) - pv / (a * zk * zl)
    c = cv / zl ** 2 + pv / (a * zl ** 2) - pw / (a * zk * zl)
    d = v * pw / (a * a * zk ** 2 * zl) + w * pv / (a * a * zk * zl ** 2)

    return exponent + np.log(b * c + d)


def gev_to_frechet(y, mu, lam, xi):
    """
    Unit Frechet transform z = (1 + xi (y - mu) / lambda)^(1/xi), the log
    Jacobian log dz/dy and a mask of points inside the GEV support.
    """
    u = (np.asarray(y, dtype=float) - mu) / lam

    if abs(xi) < GUMBEL_LIMIT:
        return np.exp(u), u - np.log(lam), np.ones(u.shape, dtype=bool)

    t = 1 + xi * u
    valid = t > 0
    t = np.where(valid, t, 1.0)
    logt = np.log(t)
    return np.exp(logt / xi), (1 / xi - 1) * logt - np.log(lam), valid


def frechet_to_gev(z, mu, lam, xi):
    z = np.asarray(z, dtype=float)
    if abs(xi) < GUMBEL_LIMIT:
        return mu + lam * np.log(z)
    return mu + lam * (z ** xi - 1) / xi


def simulate_frechet(coords, sigma, n, rng, chunk=STORM_CHUNK):
    """
    n independent unit Frechet fields at the given stations by the spectral
    construction Z(t) = max_i zeta_i phi(t - U_i; Sigma), with storm centres
    U_i uniform on the station window padded by four standard deviations.
    Storms arrive in decreasing order of zeta_i = area / Gamma_i, Gamma_i
    the points of a unit rate Poisson process; simulation of a field stops
    once area * phi(0; Sigma) / Gamma_i cannot exceed its current minimum.
    """
    gen = as_generator(rng)
    coords = np.asarray(coords, dtype=float)

    try:
        cholesky(sigma)
    except DecompositionError:
        raise DomainError('Storm covariance is not positive definite!')

    pad = 4 * np.sqrt(np.linalg.eigvalsh(sigma).max())
    lower, upper = coords.min(axis=0) - pad, coords.max(axis=0) + pad
    area = np.prod(upper - lower)
    precision = inverse_spd(sigma)
    peak = 1 / (2 * np.pi * np.sqrt(np.linalg.det(sigma)))

    fields = np.empty((n, coords.shape[0]))
    storms = 0

    for i in range(n):
        z = np.zeros(coords.shape[0])
        gamma = 0.0

        while True:
            arrivals = gamma + np.cumsum(gen.exponential(size=chunk))
            centres = gen.uniform(lower, upper, (chunk, 2))
            d = coords[None, :, :] - centres[:, None, :]
            q = np.einsum('sqi,ij,sqj->sq', d, precision, d)
            profile = (area / arrivals)[:, None] * peak * np.exp(-q / 2)
            z = np.maximum(z, profile.max(axis=0))
            gamma = arrivals[-1]
            storms += chunk

            if area * peak / gamma < z.min():
                break

        fields[i] = z

    log.debug('Simulated %d fields from %d storms.', n, storms)

    return fields


class SmithPrior(namedtuple('SmithPrior', 'design')):
    """
    Flat prior on (0, 1000) x (-300, 300) x (0, 1000) for Sigma, the real
    line for the regression coefficients and (0, inf) for xi, restricted to
    positive definite Sigma and positive scale at every station.
    """
    proper = False

    def in_support(self, theta):
        t = _rows(theta)
        s11, s12, s22 = t[:, 0], t[:, 1], t[:, 2]
        lam = t[:, 6:9] @ self.design.T

        inside = ((s11 > 0) & (s11 < 1000) & (s12 > -300) & (s12 < 300) &
                  (s22 > 0) & (s22 < 1000) & (s11 * s22 > s12 * s12) &
                  (t[:, 9] > 0) & np.all(lam > 0, axis=1) &
                  np.all(np.isfinite(t), axis=1))
        return _squeeze(inside, theta)

    def logpdf(self, theta):
        values = np.where(self.in_support(_rows(theta)), 0.0, -np.inf)
        return _squeeze(values, theta)

    def sample(self, rng, m):
        raise NotImplementedError('Cannot sample from an improper prior.')


class Smith(Model):
    name = 'smith'
    names = ('sigma11', 'sigma12', 'sigma22', 'mu0', 'mu1', 'mu2',
             'lambda0', 'lambda1', 'lambda2', 'xi')

    def __init__(self, coords, n=60, prior=None):
        coords = np.asarray(coords, dtype=float)

        if coords.ndim != 2 or coords.shape[1] != 2 or coords.shape[0] < 2:
            raise ValueError('Expected at least two station coordinates.')

        self.coords = coords
        self.n = int(n)
        self.design = np.column_stack([np.ones(coords.shape[0]), coords])
        self.lags, distances = pair_lags(coords)
        self.pair_k, self.pair_l = np.triu_indices(coords.shape[0], k=1)

        if np.any(distances <= 0):
            raise ValueError('Stations must have distinct coordinates.')

        Model.__init__(self, prior or SmithPrior(self.design))

    @property
    def stations(self):
        return self.coords.shape[0]

    def margins(self, theta):
        return (self.design @ theta[3:6], self.design @ theta[6:9],
                float(theta[9]))

    def _check(self, theta):
        theta = np.asarray(theta, dtype=float)
        sigma = sigma_matrix(theta)

        if not is_covariance(sigma):
            raise DomainError('Sigma %r is not positive definite.' %
                              sigma.tolist())
        if np.any(self.margins(theta)[1] <= 0):
            raise DomainError('GEV scale must be positive at every station.')

        return theta, sigma

    def pairwise_loglik(self, theta, y):
        theta = np.asarray(theta, dtype=float)
        sigma = sigma_matrix(theta)
        y = np.asarray(y, dtype=float)
        batch = y.shape[:-2]

        if not is_covariance(sigma):
            return np.full(batch, -np.inf)[()]

        mu, lam, xi = self.margins(theta)

        if np.any(lam <= 0):
            return np.full(batch, -np.inf)[()]

        a = mahalanobis(self.lags, sigma)

        if np.any(a <= 0):
            raise ValueError('Degenerate station geometry: a(h) = 0.')

        with np.errstate(all='ignore'):
            z, logjac, valid = gev_to_frechet(y, mu, lam, xi)
            zk, zl = z[..., self.pair_k], z[..., self.pair_l]
            terms = (pair_logdensity(zk, zl, a) + logjac[..., self.pair_k] +
                     logjac[..., self.pair_l])
            total = terms.sum(axis=(-2, -1))

        ok = valid.all(axis=(-2, -1)) & np.isfinite(total)
        return np.where(ok, total, -np.inf)[()]

    def simulate_fields(self, theta, rng, n=None):
        _, sigma = self._check(theta)
        return simulate_frechet(self.coords, sigma, n or self.n, rng)

    def simulate(self, theta, rng):
        theta, _ = self._check(theta)
        mu, lam, xi = self.margins(theta)
        return frechet_to_gev(self.simulate_fields(theta, rng), mu, lam, xi)

    def initial(self, y):
        y = np.asarray(y, dtype=float)
        n = y.shape[0]
        fits = np.array([genextreme.fit(y[:, k]) for k in range(y.shape[1])])
        shape, loc, scale = -fits[:, 0], fits[:, 1], fits[:, 2]

        beta_mu, *_ = np.linalg.lstsq(self.design, loc, rcond=None)
        beta_lambda, *_ = np.linalg.lstsq(self.design, scale, rcond=None)

        if np.any(self.design @ beta_lambda <= 0):
            beta_lambda = np.array([scale.mean(), 0.0, 0.0])

        # unit Frechet margins from the station-wise fits
        cdf = np.clip(genextreme.cdf(y, fits[:, 0], loc, scale),
                      1e-12, 1 - 1e-12)
        z = -1 / np.log(cdf)
        delta = n / (1 / np.maximum(z[:, self.pair_k], z[:, self.pair_l])
                     ).sum(axis=0)
        delta = np.clip(delta, 1.001, 1.999)
        a = 2 * ndtri(delta / 2)
        _, distances = pair_lags(self.coords)
        s = float(np.clip(np.median((distances / a) ** 2), 1e-3, 999.0))

        theta = np.concatenate([[s, 0.0, s], beta_mu, beta_lambda,
                                [max(shape.mean(), 0.01)]])

        for _ in range(30):
            if np.isfinite(self.pairwise_loglik(theta, y)):
                log.debug('Initial value %r', theta.tolist())
                return theta
            theta[9] /= 2

        raise ValueError('Could not find a starting point inside the GEV '
                         'support.')

    def describe(self):
        return dict(Model.describe(self), n=self.n, stations=self.stations)
