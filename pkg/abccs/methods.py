"""
Inference methods and the model x method capability matrix.

Every method draws its random numbers from fixed substreams of a base
RngStream:

    0          observed data
    100000 + r estimate_HJ replicate r
    400000 + b ABC proposal block b
    700000     resampling
    800000 + c MCMC chain c
"""

import logging

from collections import namedtuple

import numpy as np

from abccs.estimating import (RescaledScore, estimate_HJ, solve_mcle)
from abccs.numkernel import inverse_spd
from abccs.samplers import (DistanceSpec, TProposal, WeightedSample,
                            abc_importance, abc_reject, resample,
                            rw_metropolis, tune_proposal)


log = logging.getLogger(__name__)

DATA_STREAM = 0
HJ_STREAM = 100000
ABC_STREAM = 400000
RESAMPLE_STREAM = 700000
MCMC_STREAM = 800000

# ABC block substreams must stay below the resampling substream
MAX_BLOCKS = RESAMPLE_STREAM - ABC_STREAM

Capabilities = {
    'normal-parabola': ('abc-cs', 'abc-suffstat', 'abc-t1', 'exact',
                        'full-mcmc'),
    'equicorr': ('abc-cs', 'abc-suffstat', 'pairwise-mcmc',
                 'calibrated-pairwise-mcmc', 'full-mcmc'),
    'probit': ('abc-cs', 'abc-counts', 'pairwise-mcmc',
               'calibrated-pairwise-mcmc', 'full-mcmc'),
    'smith': ('abc-cs', 'pairwise-mcmc', 'calibrated-pairwise-mcmc'),
}

Methods = ('abc-cs', 'abc-suffstat', 'abc-t1', 'abc-counts', 'exact',
           'pairwise-mcmc', 'calibrated-pairwise-mcmc', 'full-mcmc')


class UnsupportedMethod(NotImplementedError):
    def __init__(self, model, method, reason=None):
        self.model = model
        self.method = method
        NotImplementedError.__init__(
            self, 'Method %r is not available for model %r%s.' %
            (method, model, ' (%s)' % reason if reason else ''))


class SamplerSettings(namedtuple('SamplerSettings',
                                 ('n_proposals', 'alpha', 'proposal_df',
                                  'proposal_scale', 'n_resample', 'mcmc_iter',
                                  'burn_in', 'block_size'))):
    def __new__(cls, n_proposals=100000, alpha=0.001, proposal_df=5.0,
                proposal_scale=5.0, n_resample=1000, mcmc_iter=30000,
                burn_in=5000, block_size=1000):
        self = super(SamplerSettings, cls).__new__(
            cls, int(n_proposals), float(alpha), float(proposal_df),
            float(proposal_scale), int(n_resample), int(mcmc_iter),
            int(burn_in), int(block_size))

        if self.block_size > 0 and self.blocks > MAX_BLOCKS:
            raise ValueError('%d proposals in blocks of %d need %d blocks, '
                             'at most %d are supported.' %
                             (self.n_proposals, self.block_size, self.blocks,
                              MAX_BLOCKS))

        return self

    @property
    def blocks(self):
        return -(-self.n_proposals // self.block_size)


class MethodResult(namedtuple('MethodResult',
                              'method sample weighted mcle estimate meta')):
    """
    sample is the equal-weight output; weighted the importance-weighted
    ABC sample it was resampled from (or sample itself).
    """

    def as_dict(self):
        return {'method': self.method,
                'mcle': None if self.mcle is None else self.mcle.tolist(),
                'meta': self.meta}


def check_capability(model, method):
    if method not in Methods:
        raise UnsupportedMethod(model.name, method, 'unknown method')
    if method not in Capabilities.get(model.name, ()):
        raise UnsupportedMethod(model.name, method)
    if method == 'full-mcmc' and model.full() is None:
        raise UnsupportedMethod(model.name, method,
                                'full likelihood is intractable')


def observe(model, theta, rng):
    """Observed dataset simulated at theta from the data substream."""
    return model.simulate(model.check_theta(theta), rng.spawn(DATA_STREAM))


def _log_posterior(prior, cl, y, weight=1.0):
    def log_target(theta):
        lp = prior.logpdf(theta)
        if not np.isfinite(lp):
            return -np.inf
        return lp + float(cl.logcl(theta, y)) / weight
    return log_target


class _Run(object):
    def __init__(self, model, y, settings, rng, R, workers):
        self.model = model
        self.y = y
        self.settings = settings
        self.rng = rng
        self.R = R
        self.workers = workers
        self.cl = model.composite()
        self._mcle = None
        self._estimate = None

    @property
    def mcle(self):
        if self._mcle is None:
            self._mcle = solve_mcle(self.cl, self.y, self.model.initial(self.y))
            log.info('MCLE: %r', self._mcle.tolist())
        return self._mcle

    def estimate(self, summaries=()):
        if self._estimate is None or summaries:
            est = self.model.exact_godambe(self.mcle)
            if est is None or summaries:
                est = estimate_HJ(self.model, self.cl, self.mcle, self.R,
                                  self.rng.spawn(HJ_STREAM), self.workers,
                                  summaries)
            self._estimate = est
        return self._estimate

    def abc(self, summary, spec):
        s = self.settings
        target = summary(self.y)
        rng = self.rng.spawn(ABC_STREAM)

        if self.model.sampler == 'reject':
            weighted = abc_reject(self.model.prior, self.model, summary, spec,
                                  target, s.n_proposals, s.alpha, rng,
                                  self.workers, s.block_size)
        else:
            est = self.estimate()
            proposal = TProposal(s.proposal_df, est.theta,
                                 s.proposal_scale * est.V)
            weighted = abc_importance(proposal, self.model.prior, self.model,
                                      summary, spec, target, s.n_proposals,
                                      s.alpha, rng, self.workers,
                                      s.block_size)

        sample = resample(weighted, s.n_resample,
                          self.rng.spawn(RESAMPLE_STREAM))
        return sample, weighted

    def abc_cs(self):
        summary = RescaledScore(self.estimate(), self.cl)
        return self.abc(summary, DistanceSpec(self.model.score_distance))

    def abc_summary(self, method):
        kind, dist = self.model.summaries[method]
        summary = self.model.summary(kind)

        if dist == 'standardized':
            est = self.estimate(summaries=(summary,))
            spec = DistanceSpec('euclidean',
                                inverse_spd(est.summary_cov[0]))
        else:
            spec = DistanceSpec(dist)

        return self.abc(summary, spec)

    def mcmc(self, cl, weight=1.0, init=None):
        s = self.settings
        init = self.mcle if init is None else init
        log_target = _log_posterior(self.model.prior, cl, self.y, weight)
        fallback = None if self._estimate is None else self._estimate.V
        scale = tune_proposal(log_target, init, fallback)
        sample = rw_metropolis(log_target, init, scale, s.mcmc_iter,
                               s.burn_in, self.rng.spawn(MCMC_STREAM))
        sample.meta['calibration'] = weight
        return sample, sample

    def exact(self):
        table = self.model.exact_posterior(self.y)
        sample = WeightedSample(table.grid, table.weights(),
                                {'sampler': 'exact-grid',
                                 'grid_size': table.grid.shape[0]})
        return sample, sample


def run_method(model, method, y, settings, rng, R=1000, workers=1):
    """
    Approximate the posterior of model given y with one of the supported
    methods. Returns MethodResult.
    """
    check_capability(model, method)
    run = _Run(model, y, settings, rng, R, workers)

    if method == 'exact':
        sample, weighted = run.exact()
    elif method == 'abc-cs':
        sample, weighted = run.abc_cs()
    elif method in ('abc-suffstat', 'abc-t1', 'abc-counts'):
        sample, weighted = run.abc_summary(method)
    elif method == 'pairwise-mcmc':
        sample, weighted = run.mcmc(run.cl)
    elif method == 'calibrated-pairwise-mcmc':
        sample, weighted = run.mcmc(run.cl, run.estimate().omega_bar)
    else:
        full = model.full()
        init = solve_mcle(full, y, model.initial(y))
        sample, weighted = run.mcmc(full, init=init)

    meta = dict(weighted.meta, method=method, model=model.name)
    if run._estimate is not None:
        meta['omega_bar'] = run._estimate.omega_bar

    return MethodResult(method, sample, weighted, run._mcle, run._estimate,
                        meta)
