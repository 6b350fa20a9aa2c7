"""
ABC accept-reject and importance samplers.

Proposals are generated in blocks of block_size; block b draws everything
it needs from rng.spawn(b), so the output does not depend on how many
workers process the blocks.
"""

import logging

from collections import namedtuple
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.stats import multivariate_t

from abccs.numkernel import draw_student_t
from abccs.samplers.sample import (EmptySampleError, WeightedSample,
                                   distance, select_epsilon)


log = logging.getLogger(__name__)

DEFAULT_BLOCK_SIZE = 1000


class TProposal(namedtuple('TProposal', 'df location scale')):
    def __new__(cls, df, location, scale):
        location = np.atleast_1d(np.asarray(location, dtype=float))
        scale = np.atleast_2d(np.asarray(scale, dtype=float))
        if df <= 0:
            raise ValueError('Degrees of freedom must be positive.')
        return super(TProposal, cls).__new__(cls, float(df), location, scale)

    def sample(self, rng, m):
        return draw_student_t(rng, self.df, self.location, self.scale, m)

    def logpdf(self, theta):
        values = multivariate_t.logpdf(theta, self.location, self.scale,
                                       self.df)
        return np.atleast_1d(values)


def _summarize_rows(model, summary, thetas, gen):
    rows, failures = [], 0
    for theta in thetas:
        try:
            rows.append(summary(model.simulate(theta, gen)))
        except (ArithmeticError, ValueError) as ex:
            log.debug('Simulation failed at %r: %s', theta.tolist(), ex)
            rows.append(None)
            failures += 1
    return rows, failures


def simulate_distances(model, summary, spec, target, thetas, gen):
    """
    Distances between the summaries of data simulated at each proposal and
    the observed summary. Proposals whose simulation or summary fails get
    an infinite distance; returns (distances, failures).
    """
    target = np.atleast_1d(np.asarray(target, dtype=float))
    m = thetas.shape[0]

    if m == 0:
        return np.empty(0), 0

    stats = None
    if model.batched and hasattr(summary, 'batch'):
        try:
            with np.errstate(all='ignore'):
                stats = np.asarray(summary.batch(
                    model.simulate_batch(thetas, gen))).reshape(m, -1)
        except (ArithmeticError, ValueError) as ex:
            log.debug('Batch simulation failed (%s), retrying row-wise.', ex)

    if stats is not None:
        bad = ~np.all(np.isfinite(stats), axis=1)
        dist = np.full(m, np.inf)
        dist[~bad] = distance(stats[~bad], target, spec)
        return dist, int(bad.sum())

    rows, failures = _summarize_rows(model, summary, thetas, gen)
    dist = np.full(m, np.inf)
    for i, s in enumerate(rows):
        if s is not None and np.all(np.isfinite(s)):
            dist[i] = distance(s, target, spec)
        elif s is not None:
            failures += 1
    return dist, failures


def _blocks(n, block_size):
    return [(b, min(block_size, n - b * block_size))
            for b in range((n + block_size - 1) // block_size)]


def _run_blocks(func, n_proposals, block_size, workers):
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        return list(pool.map(lambda args: func(*args),
                             _blocks(n_proposals, block_size)))


def _check(n_proposals, alpha, block_size):
    if not 0 < alpha <= 1:
        raise ValueError('alpha must be in (0, 1], got %r.' % alpha)
    if n_proposals < 1 or n_proposals * alpha < 1 - 1e-9:
        raise ValueError('n_proposals must be at least 1/alpha = %g.' %
                         (1 / alpha))
    if block_size < 1:
        raise ValueError('block_size must be positive.')


def abc_reject(prior, model, summary, spec, target, n_proposals, alpha, rng,
               workers=1, block_size=DEFAULT_BLOCK_SIZE):
    """
    ABC accept-reject: draw n_proposals parameters from the prior, simulate
    a dataset for each and keep those whose summary lies within the
    alpha-quantile of all distances to the observed summary.
    """
    _check(n_proposals, alpha, block_size)

    def block(b, m):
        gen = rng.spawn(b).generator()
        thetas = prior.sample(gen, m)
        dist, failures = simulate_distances(model, summary, spec, target,
                                            thetas, gen)
        log.debug('Block %d: %d proposals, %d failures.', b, m, failures)
        return thetas, dist, failures

    results = _run_blocks(block, n_proposals, block_size, workers)

    thetas = np.concatenate([t for t, _, _ in results])
    dist = np.concatenate([d for _, d, _ in results])
    failures = sum(f for _, _, f in results)

    if failures:
        log.warning('%d of %d proposals lost to simulation failures.',
                    failures, n_proposals)

    epsilon = select_epsilon(dist, alpha)
    accept = dist <= epsilon

    log.info('Accepted %d of %d proposals at epsilon = %.6g.',
             int(accept.sum()), n_proposals, epsilon)

    meta = {'sampler': 'abc-reject',
            'seed': rng.seed,
            'stream_id': rng.stream_id,
            'epsilon': epsilon,
            'alpha': alpha,
            'n_proposals': n_proposals,
            'accepted': int(accept.sum()),
            'acceptance_rate': float(accept.mean()),
            'failures': failures,
            'block_size': block_size}

    return WeightedSample(thetas[accept], None, meta)


def abc_importance(proposal, prior, model, summary, spec, target,
                   n_proposals, alpha, rng, workers=1,
                   block_size=DEFAULT_BLOCK_SIZE):
    """
    ABC importance sampling from a multivariate t proposal. Proposals
    outside the prior support get zero weight and are not simulated; the
    threshold is the alpha-quantile of distances among the others.
    Accepted draws are weighted by prior / proposal density.
    """
    _check(n_proposals, alpha, block_size)

    def block(b, m):
        gen = rng.spawn(b).generator()
        thetas = proposal.sample(gen, m)
        logw = prior.logpdf(thetas) - proposal.logpdf(thetas)
        inside = np.isfinite(logw)
        dist = np.full(m, np.inf)
        dist[inside], failures = simulate_distances(
            model, summary, spec, target, thetas[inside], gen)
        return thetas, logw, dist, inside, failures

    results = _run_blocks(block, n_proposals, block_size, workers)

    thetas = np.concatenate([r[0] for r in results])
    logw = np.concatenate([r[1] for r in results])
    dist = np.concatenate([r[2] for r in results])
    inside = np.concatenate([r[3] for r in results])
    failures = sum(r[4] for r in results)

    if not np.any(inside):
        raise EmptySampleError('All %d proposals fall outside the prior '
                               'support.' % n_proposals)

    if failures:
        log.warning('%d of %d proposals lost to simulation failures.',
                    failures, n_proposals)

    epsilon = select_epsilon(dist[inside], alpha)
    accept = inside & (dist <= epsilon)
    weights = np.exp(logw[accept] - logw[accept].max())

    log.info('Accepted %d of %d proposals (%d inside the prior support) at '
             'epsilon = %.6g.', int(accept.sum()), n_proposals,
             int(inside.sum()), epsilon)

    meta = {'sampler': 'abc-importance',
            'seed': rng.seed,
            'stream_id': rng.stream_id,
            'epsilon': epsilon,
            'alpha': alpha,
            'n_proposals': n_proposals,
            'inside_support': int(inside.sum()),
            'accepted': int(accept.sum()),
            'acceptance_rate': float(accept.sum()) / n_proposals,
            'failures': failures,
            'block_size': block_size,
            'proposal_df': proposal.df}

    return WeightedSample(thetas[accept], weights, meta)
