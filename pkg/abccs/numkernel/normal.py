"""Univariate and bivariate standard normal distribution functions."""

import logging

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import ndtr


log = logging.getLogger(__name__)

TWOPI = 2 * np.pi

# Gauss-Legendre rule on (-1, 1) used by both correlation branches.
GL_NODES, GL_WEIGHTS = leggauss(32)

# Above this |rho| integrating over asin(rho) loses accuracy and the
# Drezner-Wesolowsky expansion around |rho| = 1 takes over.
HIGH_CORRELATION = 0.925


def std_normal_cdf(x):
    return ndtr(x)


def std_normal_pdf(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / np.sqrt(TWOPI)


def _upper_low(h, k, r):
    # P(X > h, Y > k) = Φ(-h)Φ(-k) + 1/(2π) ∫_0^asin(r) exp(...) dθ
    hk = h * k
    hs = (h * h + k * k) / 2
    asr = np.arcsin(r)
    sn = np.sin(np.multiply.outer(asr, GL_NODES + 1) / 2)
    terms = np.exp((sn * hk[..., None] - hs[..., None]) / (1 - sn * sn))
    return asr * (terms @ GL_WEIGHTS) / (4 * np.pi) + ndtr(-h) * ndtr(-k)


def _upper_high(h, k, r):
    neg = r < 0
    k = np.where(neg, -k, k)
    hk = h * k

    aas = (1 - r) * (1 + r)
    a = np.sqrt(aas)
    bs = (h - k) ** 2
    c = (4 - hk) / 8
    d = (12 - hk) / 16

    asr = -(bs / aas + hk) / 2
    bvn = np.where(asr > -100,
                   a * np.exp(asr) * (1 - c * (bs - aas) * (1 - d * bs / 5) / 3
                                      + c * d * aas * aas / 5),
                   0.0)

    b = np.sqrt(bs)
    sp = np.sqrt(TWOPI) * ndtr(-b / a)
    bvn = bvn - np.where(-hk < 100,
                         np.exp(-hk / 2) * sp * b
                         * (1 - c * bs * (1 - d * bs / 5) / 3),
                         0.0)

    a = a / 2
    xs = (np.multiply.outer(a, GL_NODES + 1)) ** 2
    rs = np.sqrt(1 - xs)
    asr = -(bs[..., None] / xs + hk[..., None]) / 2
    sp = 1 + c[..., None] * xs * (1 + d[..., None] * xs)
    ep = np.exp(-hk[..., None] * (1 - rs) / (2 * (1 + rs))) / rs
    terms = np.where(asr > -100, np.exp(asr) * (ep - sp), 0.0)
    bvn = bvn + a * (terms @ GL_WEIGHTS)
    bvn = -bvn / TWOPI

    return np.where(neg,
                    -bvn + np.maximum(0, ndtr(-h) - ndtr(-k)),
                    bvn + ndtr(-np.maximum(h, k)))


def bvn_cdf(h, k, rho):
    """
    Standard bivariate normal probability P(X <= h, Y <= k) with correlation
    rho. Arguments broadcast against each other; infinite limits are allowed.
    """
    h, k, rho = np.broadcast_arrays(np.asarray(h, dtype=float),
                                    np.asarray(k, dtype=float),
                                    np.asarray(rho, dtype=float))

    if np.any(np.abs(rho) >= 1) or np.any(np.isnan(rho)):
        raise ValueError('Correlation must lie in (-1, 1)!')

    scalar = h.ndim == 0
    h, k, rho = np.atleast_1d(h, k, rho)

    # lower probability at (h, k) is the upper one at (-h, -k)
    uh = np.where(np.isfinite(h), -h, 0.0)
    uk = np.where(np.isfinite(k), -k, 0.0)

    with np.errstate(divide='ignore', invalid='ignore', over='ignore',
                     under='ignore'):
        high = np.abs(rho) >= HIGH_CORRELATION
        p = np.where(high,
                     _upper_high(uh, uk, np.where(high, rho, 0.95)),
                     _upper_low(uh, uk, np.where(high, 0.0, rho)))

    p = np.clip(p, 0.0, 1.0)
    p = np.where(h == np.inf, ndtr(k), p)
    p = np.where(k == np.inf, ndtr(h), p)
    p = np.where((h == -np.inf) | (k == -np.inf), 0.0, p)

    return p[0] if scalar else p
