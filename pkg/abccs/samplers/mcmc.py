import logging

import numpy as np

from abccs.estimating import CompositeLikelihood, score_jacobian
from abccs.numkernel import (as_generator, cholesky, inverse_spd,
                             symmetrize)
from abccs.samplers.sample import WeightedSample


log = logging.getLogger(__name__)


def _evaluate(log_target, theta):
    try:
        value = float(log_target(theta))
    except (ArithmeticError, ValueError):
        return -np.inf
    return value if not np.isnan(value) else -np.inf


def rw_metropolis(log_target, init, proposal_scale, n_iter, burn_in, rng):
    """
    Gaussian random-walk Metropolis. n_iter counts all iterations; the
    first burn_in states are dropped from the returned sample.
    """
    init = np.atleast_1d(np.asarray(init, dtype=float))
    d = init.shape[0]

    if not 0 <= burn_in < n_iter:
        raise ValueError('Need 0 <= burn_in < n_iter, got %d and %d.' %
                         (burn_in, n_iter))

    current = _evaluate(log_target, init)
    if not np.isfinite(current):
        raise ValueError('Log target is not finite at the initial state %r.'
                         % init.tolist())

    L = cholesky(np.atleast_2d(proposal_scale))
    gen = as_generator(rng)
    steps = gen.standard_normal((n_iter, d)) @ L.T
    logu = np.log(gen.uniform(size=n_iter))

    theta = init.copy()
    draws = np.empty((n_iter - burn_in, d))
    accepted = 0

    for i in range(n_iter):
        candidate = theta + steps[i]
        value = _evaluate(log_target, candidate)

        if logu[i] < value - current:
            theta, current = candidate, value
            accepted += 1

        if i >= burn_in:
            draws[i - burn_in] = theta

    rate = accepted / n_iter
    log.info('Metropolis: %d iterations, acceptance rate %.3f.', n_iter, rate)

    meta = {'sampler': 'rw-metropolis',
            'n_iter': n_iter,
            'burn_in': burn_in,
            'acceptance_rate': rate}

    if hasattr(rng, 'seed'):
        meta.update(seed=rng.seed, stream_id=rng.stream_id)

    return WeightedSample(draws, None, meta)


def tune_proposal(log_target, mode, fallback=None):
    """
    Random-walk covariance (2.4^2 / d) times the inverse negative Hessian
    of the log target at its mode.
    """
    mode = np.atleast_1d(np.asarray(mode, dtype=float))
    d = mode.shape[0]
    cl = CompositeLikelihood(lambda theta, _: log_target(theta), dim=d)

    try:
        cov = inverse_spd(symmetrize(-score_jacobian(cl, mode, None)))
    except (ArithmeticError, ValueError) as ex:
        if fallback is None:
            raise
        log.debug('Hessian at the mode unusable (%s), using fallback.', ex)
        cov = np.atleast_2d(fallback)

    return symmetrize(2.4 ** 2 / d * cov)
