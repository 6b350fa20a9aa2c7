import logging

from collections import namedtuple

import numpy as np

from abccs.numkernel import DecompositionError, as_generator, cholesky


log = logging.getLogger(__name__)


class EmptySampleError(ValueError):
    pass


class WeightedSample(namedtuple('WeightedSample', 'draws weights meta')):
    """
    Posterior draws (m x d) with importance weights normalized to one and
    a metadata dictionary describing how they were produced.
    """

    def __new__(cls, draws, weights=None, meta=None):
        draws = np.asarray(draws, dtype=float)
        if draws.ndim == 1:
            draws = draws[:, None]
        m = draws.shape[0]

        if m < 1:
            raise EmptySampleError('A sample needs at least one draw.')

        if weights is None:
            weights = np.full(m, 1.0 / m)
        else:
            weights = np.asarray(weights, dtype=float)
            if weights.shape != (m,):
                raise ValueError('Expected %d weights, got %r.' %
                                 (m, weights.shape))
            if np.any(weights < 0) or not np.all(np.isfinite(weights)):
                raise ValueError('Weights must be finite and non-negative!')
            total = weights.sum()
            if total <= 0:
                raise EmptySampleError('All weights are zero.')
            weights = weights / total

        return super(WeightedSample, cls).__new__(cls, draws, weights,
                                                  dict(meta or {}))

    @property
    def size(self):
        return self.draws.shape[0]

    @property
    def dim(self):
        return self.draws.shape[1]

    def ess(self):
        return float(1.0 / np.sum(self.weights ** 2))

    def mean(self):
        return self.weights @ self.draws


class DistanceSpec(namedtuple('DistanceSpec', 'kind precision factor')):
    KINDS = ('euclidean', 'l1')

    def __new__(cls, kind='euclidean', precision=None):
        if kind not in cls.KINDS:
            raise ValueError('Unknown distance %r' % kind)

        factor = None
        if precision is not None:
            if kind != 'euclidean':
                raise ValueError('Only the Euclidean distance takes a '
                                 'precision matrix.')
            precision = np.atleast_2d(np.asarray(precision, dtype=float))
            try:
                factor = cholesky(precision)
            except DecompositionError as ex:
                raise ValueError('Precision matrix is not positive definite '
                                 '(pivot %d).' % ex.pivot)

        return super(DistanceSpec, cls).__new__(cls, kind, precision, factor)


def distance(a, b, spec):
    """Distances between the rows of a and the vector b."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)

    if a.shape[-1] != b.shape[-1]:
        raise ValueError('Summary lengths differ: %d vs %d.' %
                         (a.shape[-1], b.shape[-1]))

    diff = a - b

    if spec.kind == 'l1':
        return np.abs(diff).sum(axis=-1)

    if spec.factor is not None:
        # d' P d = |L' d|^2 with P = L L'
        diff = diff @ spec.factor

    return np.sqrt((diff * diff).sum(axis=-1))


def select_epsilon(distances, alpha):
    """The ceil(alpha N)-th smallest of the N finite distances."""
    if not 0 < alpha <= 1:
        raise ValueError('Quantile level must be in (0, 1], got %r.' % alpha)

    d = np.asarray(distances, dtype=float).ravel()
    finite = d[np.isfinite(d)]

    if finite.size == 0:
        raise EmptySampleError('No finite distances to threshold.')

    k = max(1, int(np.ceil(alpha * finite.size - 1e-9)))
    return float(np.partition(finite, k - 1)[k - 1])


def resample(ws, m_out, rng):
    """Multinomial resampling with replacement to m_out equal-weight draws."""
    if m_out < 1:
        raise ValueError('Resample size must be positive.')

    gen = as_generator(rng)
    index = gen.choice(ws.size, size=m_out, replace=True, p=ws.weights)
    meta = dict(ws.meta, resampled_from=ws.size, ess=ws.ess())

    log.debug('Resampled %d draws (ESS %.1f) to %d.', ws.size, ws.ess(),
              m_out)

    return WeightedSample(ws.draws[index], None, meta)
