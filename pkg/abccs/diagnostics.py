"""
Posterior comparison: KL divergence to a tabulated reference density,
weighted posterior summaries, replicated studies and extremal coefficient
curves for the Smith model.
"""

import logging

from collections import namedtuple
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid
from scipy.stats import gaussian_kde

from abccs.methods import observe, run_method
from abccs.models.smith import extremal_coeff, is_covariance, pair_lags
from abccs.numkernel import RngStream
from abccs.samplers import EmptySampleError
from abccs.utils import report


log = logging.getLogger(__name__)

DENSITY_FLOOR = 1e-12
TRIAL_STRIDE = 10 ** 6


def kl_divergence_1d(reference, sample, component=0):
    """
    KL(reference || sample) with the sample density estimated by a weighted
    Gaussian KDE (Silverman bandwidth) on the reference grid.
    """
    x = sample.draws[:, component]
    w = sample.weights
    mean = w @ x

    if w @ (x - mean) ** 2 <= 0:
        raise ValueError('Cannot estimate a density from a zero-variance '
                         'sample.')

    kde = gaussian_kde(x, bw_method='silverman', weights=w)
    q = np.maximum(kde(reference.grid), DENSITY_FLOOR)
    p = reference.density

    with np.errstate(divide='ignore', invalid='ignore'):
        integrand = np.where(p > 0, p * (np.log(p) - np.log(q)), 0.0)

    return max(0.0, float(trapezoid(integrand, reference.grid)))


def weighted_quantile(x, w, p):
    """Lower weighted quantile: smallest x with cumulative weight >= p."""
    order = np.argsort(x, kind='stable')
    cum = np.cumsum(w[order])
    index = np.searchsorted(cum, np.asarray(p) * cum[-1] - 1e-12)
    return x[order][np.minimum(index, x.shape[0] - 1)]


class PosteriorSummary(namedtuple('PosteriorSummary',
                                  'names mean sd q025 q50 q975 ess')):
    def as_dict(self):
        return {'ess': self.ess,
                'parameters': dict(
                    (name, {'mean': float(self.mean[i]),
                            'sd': float(self.sd[i]),
                            'q025': float(self.q025[i]),
                            'q50': float(self.q50[i]),
                            'q975': float(self.q975[i])})
                    for i, name in enumerate(self.names))}

    def dump(self):
        print('Posterior summary (ESS %.1f)' % self.ess)
        report.table(['parameter', 'mean', 'sd', '2.5%', '50%', '97.5%'],
                     [[name, float(self.mean[i]), float(self.sd[i]),
                       float(self.q025[i]), float(self.q50[i]),
                       float(self.q975[i])]
                      for i, name in enumerate(self.names)])


def summarize(sample, names):
    draws, w = sample.draws, sample.weights
    mean = w @ draws
    sd = np.sqrt(np.maximum(w @ (draws - mean) ** 2, 0.0))
    quantiles = np.array([weighted_quantile(draws[:, j], w,
                                            [0.025, 0.5, 0.975])
                          for j in range(draws.shape[1])])

    return PosteriorSummary(tuple(names), mean, sd, quantiles[:, 0],
                            quantiles[:, 1], quantiles[:, 2], sample.ess())


class TrialResult(namedtuple('TrialResult', 'trial stream_base means errors')):
    pass


class StudyResult(namedtuple('StudyResult',
                             'names methods trials config')):
    def frame(self):
        rows = []
        for t in self.trials:
            for method in self.methods:
                mean = t.means.get(method)
                row = {'trial': t.trial, 'stream_base': t.stream_base,
                       'method': method,
                       'status': 'ok' if mean is not None else 'failed',
                       'error': t.errors.get(method, '')}
                for i, name in enumerate(self.names):
                    row[name] = np.nan if mean is None else float(mean[i])
                rows.append(row)

        columns = ['trial', 'stream_base', 'method', 'status'] + \
            list(self.names) + ['error']
        return pd.DataFrame(rows, columns=columns)

    def column(self, method):
        """Posterior means of one method across successful trials."""
        return np.array([t.means[method] for t in self.trials
                         if t.means.get(method) is not None])


def run_study(model, methods, true_theta, seed, n_trials, settings, R=1000,
              workers=1, config=None):
    """
    Replicated experiment: trial t simulates a fresh dataset at true_theta
    from RngStream(seed, t * 10^6) and records the posterior mean of each
    method. Failing methods are recorded with their error.
    """
    true_theta = model.check_theta(true_theta)

    def trial(t):
        base = RngStream(seed, t * TRIAL_STRIDE)
        means, errors = {}, {}

        try:
            y = observe(model, true_theta, base)
        except Exception as ex:
            log.warning('Trial %d: simulation failed: %s', t, ex)
            errors = dict((m, str(ex)) for m in methods)
            return TrialResult(t, base.stream_id, means, errors)

        for method in methods:
            try:
                result = run_method(model, method, y, settings, base, R)
                means[method] = result.sample.mean()
            except Exception as ex:
                log.warning('Trial %d: %s failed: %s', t, method, ex)
                errors[method] = '%s: %s' % (type(ex).__name__, ex)

        log.info('Trial %d of %d done.', t + 1, n_trials)
        return TrialResult(t, base.stream_id, means, errors)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        trials = list(pool.map(trial, range(n_trials)))

    return StudyResult(tuple(model.names), tuple(methods), trials,
                       dict(config or {}))


class ExtremalCurve(namedtuple('ExtremalCurve',
                               'lags distance delta lower upper used skipped')):
    def frame(self):
        return pd.DataFrame({'hx': self.lags[:, 0], 'hy': self.lags[:, 1],
                             'distance': self.distance, 'delta': self.delta,
                             'lower': self.lower, 'upper': self.upper})


def sigmas_from_draws(draws):
    """Storm covariance matrices from Smith parameter draws."""
    draws = np.atleast_2d(draws)
    return np.stack([[[d[0], d[1]], [d[1], d[2]]] for d in draws])


def lags_along(distances, direction=(1.0, 0.0)):
    direction = np.asarray(direction, dtype=float)
    direction = direction / np.hypot(*direction)
    return np.outer(np.asarray(distances, dtype=float), direction)


def extremal_curve(sigmas, lags, weights=None):
    """
    Pointwise weighted mean and 95% band of delta(h) = 2 Phi(a(h) / 2) over
    a set of storm covariances. A single 2x2 matrix is a point mass.
    """
    sigmas = np.asarray(sigmas, dtype=float)
    if sigmas.ndim == 2:
        sigmas = sigmas[None]
    lags = np.atleast_2d(np.asarray(lags, dtype=float))
    weights = (np.ones(sigmas.shape[0]) if weights is None
               else np.asarray(weights, dtype=float))

    curves, used = [], []
    for i, sigma in enumerate(sigmas):
        if not is_covariance(sigma):
            continue
        curves.append(extremal_coeff(lags, sigma))
        used.append(i)

    skipped = sigmas.shape[0] - len(used)
    if skipped:
        log.debug('Skipped %d storm covariances that are not positive '
                  'definite.', skipped)
    if not used:
        raise EmptySampleError('No positive definite storm covariance.')

    curves = np.array(curves)
    w = weights[used] / weights[used].sum()
    bands = np.array([weighted_quantile(curves[:, j], w, [0.025, 0.975])
                      for j in range(lags.shape[0])])

    return ExtremalCurve(lags, np.hypot(lags[:, 0], lags[:, 1]), w @ curves,
                         bands[:, 0], bands[:, 1], len(used), skipped)


def station_curve(coords, sigmas, weights=None):
    """Extremal coefficients for every station pair, ordered by distance."""
    lags, distances = pair_lags(coords)
    order = np.argsort(distances, kind='stable')
    return extremal_curve(sigmas, lags[order], weights)
