import logging

import numpy as np
from scipy.linalg import cho_solve, lapack, solve_triangular


log = logging.getLogger(__name__)


class DecompositionError(ArithmeticError):
    def __init__(self, pivot, message=None):
        self.pivot = pivot
        ArithmeticError.__init__(
            self, message or 'Matrix not positive definite (pivot %d).' % pivot)


def as_matrix(m):
    m = np.array(m, dtype=float, ndmin=2)

    if m.ndim != 2:
        raise ValueError('Expected a matrix, got %d dimensions!' % m.ndim)
    if not np.all(np.isfinite(m)):
        raise ValueError('Matrix has non-finite entries!')

    return m


def check_symmetric(m, rtol=1e-10):
    m = as_matrix(m)

    if m.shape[0] != m.shape[1]:
        raise ValueError('Matrix is not square: %dx%d' % m.shape)

    scale = max(np.abs(m).max(), np.finfo(float).tiny)
    if np.abs(m - m.T).max() > rtol * scale:
        raise ValueError('Matrix is not symmetric!')

    return m


def symmetrize(m):
    m = as_matrix(m)
    return (m + m.T) / 2


def cholesky(m):
    """Lower triangular L such that L·Lᵀ equals the symmetric matrix m."""
    m = check_symmetric(m)

    # dpotrf zeroes the unused triangle (clean=1)
    L, info = lapack.dpotrf(m, lower=1, clean=1)

    if info > 0:
        raise DecompositionError(info - 1)
    if info < 0:
        raise ValueError('Illegal argument %d passed to dpotrf.' % -info)

    return L


def solve_spd(m, b):
    L = cholesky(m)
    return cho_solve((L, True), np.asarray(b, dtype=float))


def solve_lower(L, b):
    return solve_triangular(L, np.asarray(b, dtype=float).T, lower=True).T


def inverse_spd(m):
    m = as_matrix(m)
    return symmetrize(solve_spd(m, np.eye(m.shape[0])))


def inverse(m):
    m = as_matrix(m)

    try:
        inv = np.linalg.inv(m)
    except np.linalg.LinAlgError:
        raise ArithmeticError('Matrix is singular!')

    if not np.all(np.isfinite(inv)):
        raise ArithmeticError('Matrix is singular!')

    return inv


def is_positive_definite(m):
    try:
        cholesky(m)
    except (DecompositionError, ValueError):
        return False
    return True
