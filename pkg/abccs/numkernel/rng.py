"""
Counter-based random streams.

A stream is identified by (seed, stream_id). Both halves form the 128-bit
Philox key, so every stream is an independent sequence that is reproduced
exactly whatever thread or process asks for it.
"""

import logging

from collections import namedtuple

import numpy as np

from abccs.numkernel.linalg import cholesky


log = logging.getLogger(__name__)

MASK64 = (1 << 64) - 1


class RngStream(namedtuple('RngStream', 'seed stream_id')):
    def __new__(cls, seed, stream_id=0):
        seed, stream_id = int(seed), int(stream_id)

        if not (0 <= seed <= MASK64 and 0 <= stream_id <= MASK64):
            raise ValueError('Seed and stream id must be 64-bit unsigned '
                             'integers: (%d, %d)' % (seed, stream_id))

        return super(RngStream, cls).__new__(cls, seed, stream_id)

    def spawn(self, offset):
        return RngStream(self.seed, self.stream_id + offset)

    def generator(self):
        key = (self.seed << 64) | self.stream_id
        return np.random.Generator(np.random.Philox(key=key))


def as_generator(rng):
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError('Expected RngStream or Generator, got %r' % type(rng))


def draw_normal(rng, n):
    return as_generator(rng).standard_normal(n)


def draw_uniform(rng, n, low=0.0, high=1.0):
    return as_generator(rng).uniform(low, high, n)


def draw_student_t(rng, df, location, scale, size=None):
    """
    Multivariate t variates location + L·z·sqrt(df/χ²_df) with L the lower
    Cholesky factor of the scale matrix. Returns an array of shape (d,) or
    (size, d).
    """
    gen = as_generator(rng)
    location = np.atleast_1d(np.asarray(location, dtype=float))
    L = cholesky(scale)
    d = location.shape[0]

    m = 1 if size is None else size
    z = gen.standard_normal((m, d))
    w = np.sqrt(df / gen.chisquare(df, m))
    draws = location + (z @ L.T) * w[:, None]

    return draws[0] if size is None else draws
