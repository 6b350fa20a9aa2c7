"""
Composite likelihood machinery: scores, maximum composite likelihood
estimation, Monte Carlo sensitivity/variability matrices and the summary
statistics derived from them (rescaled and adjusted composite scores).
"""

import logging

from collections import namedtuple
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.optimize import minimize

from abccs.numkernel import (DecompositionError, cholesky, inverse,
                             solve_lower, solve_spd, symmetrize)
from abccs.utils import report


log = logging.getLogger(__name__)

DEFAULT_REPLICATIONS = 1000
MIN_REPLICATIONS = 100
# replicate substreams must stay below the ABC block substreams
MAX_REPLICATIONS = 300000
MAX_EVALUATIONS = 5000


class EvaluationError(ArithmeticError):
    def __init__(self, coordinate, value):
        self.coordinate = coordinate
        ArithmeticError.__init__(
            self, 'Composite log-likelihood is %r when perturbing '
            'coordinate %d.' % (value, coordinate))


class ConvergenceError(RuntimeError):
    def __init__(self, best, evaluations, message=None):
        self.best = best
        self.evaluations = evaluations
        RuntimeError.__init__(
            self, message or 'No convergence after %d evaluations.' %
            evaluations)


class EstimationError(ArithmeticError):
    pass


class CompositeLikelihood(namedtuple('CompositeLikelihood',
                                     'logcl score dim batched')):
    """
    logcl(theta, y) -> real, score(theta, y) -> d-vector or None.
    When batched is set both accept a stack of datasets along leading axes.
    """
    def __new__(cls, logcl, score=None, dim=1, batched=False):
        return super(CompositeLikelihood, cls).__new__(
            cls, logcl, score, int(dim), bool(batched))


def fd_steps(theta, rel=1e-5, floor=1e-5):
    return np.maximum(floor, rel * np.abs(theta))


def _as_theta(theta):
    return np.atleast_1d(np.asarray(theta, dtype=float))


def _fd_score(cl, theta, y, strict):
    theta = _as_theta(theta)
    steps = fd_steps(theta)
    columns = []

    for j, h in enumerate(steps):
        e = np.zeros_like(theta)
        e[j] = h
        fp = np.asarray(cl.logcl(theta + e, y), dtype=float)
        fm = np.asarray(cl.logcl(theta - e, y), dtype=float)

        bad = ~(np.isfinite(fp) & np.isfinite(fm))
        if strict and np.any(bad):
            raise EvaluationError(j, fp if not np.all(np.isfinite(fp)) else fm)

        columns.append(np.where(bad, np.nan, (fp - fm) / (2 * h)))

    return np.stack(columns, axis=-1)


def composite_score(cl, theta, y):
    """Gradient of the composite log-likelihood at theta for dataset y."""
    if cl.score is not None:
        return np.asarray(cl.score(_as_theta(theta), y), dtype=float)
    return _fd_score(cl, theta, y, strict=True)


def composite_score_batch(cl, theta, ys):
    """
    Scores for a stack of datasets. Rows where the score cannot be evaluated
    are NaN instead of raising.
    """
    if not cl.batched:
        rows = []
        for y in ys:
            try:
                rows.append(composite_score(cl, theta, y))
            except (ArithmeticError, ValueError):
                rows.append(np.full(cl.dim, np.nan))
        return np.array(rows)

    if cl.score is not None:
        with np.errstate(all='ignore'):
            return np.asarray(cl.score(_as_theta(theta), ys), dtype=float)

    with np.errstate(all='ignore'):
        return _fd_score(cl, theta, ys, strict=False)


def score_jacobian(cl, theta, y):
    """
    Jacobian of the composite score. Central differences of the score when
    it is available in closed form, else a second-order stencil on logcl.
    """
    theta = _as_theta(theta)
    d = theta.shape[0]
    steps = fd_steps(theta, rel=1e-4, floor=1e-4)
    jac = np.empty((d, d))

    if cl.score is not None:
        for j, h in enumerate(steps):
            e = np.zeros(d)
            e[j] = h
            jac[:, j] = (composite_score(cl, theta + e, y) -
                         composite_score(cl, theta - e, y)) / (2 * h)
        return symmetrize(jac)

    def f(delta):
        value = cl.logcl(theta + delta, y)
        if not np.isfinite(value):
            raise EvaluationError(int(np.argmax(np.abs(delta))), value)
        return value

    f0 = f(np.zeros(d))

    for j in range(d):
        ej = np.zeros(d)
        ej[j] = steps[j]
        jac[j, j] = (f(ej) - 2 * f0 + f(-ej)) / steps[j] ** 2

        for k in range(j):
            ek = np.zeros(d)
            ek[k] = steps[k]
            jac[j, k] = jac[k, j] = (f(ej + ek) - f(ej - ek) - f(ek - ej) +
                                     f(-ej - ek)) / (4 * steps[j] * steps[k])

    return jac


def solve_mcle(cl, y, init, max_evaluations=MAX_EVALUATIONS):
    """
    Maximum composite likelihood estimate: Nelder-Mead simplex followed by
    score-based Newton steps with backtracking.
    """
    init = _as_theta(init)
    evaluations = [0]

    def logcl(theta):
        evaluations[0] += 1
        try:
            value = float(cl.logcl(theta, y))
        except (ArithmeticError, ValueError):
            return -np.inf
        return value if np.isfinite(value) else -np.inf

    if not np.isfinite(logcl(init)):
        raise ValueError('Composite log-likelihood not finite at the '
                         'starting point %r' % (init,))

    tolerance = 1e-6 * (1 + np.abs(composite_score(cl, init, y)).max())

    result = minimize(lambda t: -logcl(t), init, method='Nelder-Mead',
                      options={'maxfev': max_evaluations // 2,
                               'xatol': 1e-8, 'fatol': 1e-10,
                               'adaptive': init.shape[0] > 2})
    theta = result.x if logcl(result.x) >= logcl(init) else init
    best = theta
    log.debug('Simplex stage: %d evaluations, logcl = %.6f',
              result.nfev, logcl(theta))

    while evaluations[0] < max_evaluations:
        score = composite_score(cl, theta, y)

        if np.abs(score).max() < tolerance:
            log.debug('MCLE converged after %d evaluations.', evaluations[0])
            return theta

        try:
            step = np.linalg.solve(-score_jacobian(cl, theta, y), score)
        except (np.linalg.LinAlgError, ArithmeticError):
            step = score
        if not np.all(np.isfinite(step)) or step @ score <= 0:
            step = score / max(1.0, np.abs(score).max())

        current = logcl(theta)
        t = 1.0
        while t > 1e-10:
            candidate = theta + t * step
            if logcl(candidate) >= current - 1e-12 * abs(current):
                break
            t /= 2
        else:
            raise ConvergenceError(best, evaluations[0],
                                   'Line search failed at %r' % (theta,))

        theta = candidate
        best = theta

    raise ConvergenceError(best, evaluations[0])


class GodambeEstimate(namedtuple('GodambeEstimate',
                                 ('theta', 'H', 'J', 'G', 'V', 'B_c',
                                  'omega_bar', 'replications', 'mc_se',
                                  'summary_cov'))):
    @property
    def dim(self):
        return self.theta.shape[0]

    def as_dict(self):
        def listify(v):
            return v.tolist() if isinstance(v, np.ndarray) else v

        return {'theta': listify(self.theta),
                'H': listify(self.H),
                'J': listify(self.J),
                'G': listify(self.G),
                'V': listify(self.V),
                'B_c': listify(self.B_c),
                'omega_bar': self.omega_bar,
                'replications': self.replications,
                'mc_se': dict((k, listify(v)) for k, v in
                              sorted(self.mc_se.items()))}

    def dump(self, names=None):
        names = names or ['theta%d' % i for i in range(self.dim)]
        print('Godambe estimate (R = %d, omega_bar = %.4f)' %
              (self.replications, self.omega_bar))
        for label in ('H', 'J', 'V'):
            print('')
            print(label)
            report.matrix(getattr(self, label), names)


def calibration_weight(est):
    return _calibration_weight(est.H, est.J)


def _calibration_weight(H, J):
    try:
        JHinv = J @ inverse(H)
    except ArithmeticError:
        raise EstimationError('Sensitivity matrix H is singular!')

    return float(np.trace(JHinv)) / H.shape[0]


def godambe_estimate(theta, H, J, replications=0, mc_se=None,
                     summary_cov=()):
    """Derive G, V, B_c and the calibration weight from H and J."""
    theta = _as_theta(theta)
    H = symmetrize(H)
    J = symmetrize(J)

    try:
        B_c = cholesky(J)
    except DecompositionError as ex:
        raise EstimationError('Variability matrix J is not positive definite '
                              '(pivot %d); increase the number of replications '
                              '(R = %d).' % (ex.pivot, replications))

    try:
        Hinv = inverse(H)
    except ArithmeticError:
        raise EstimationError('Sensitivity matrix H is singular!')

    G = symmetrize(H @ solve_spd(J, H))
    V = symmetrize(Hinv @ J @ Hinv.T)
    omega_bar = _calibration_weight(H, J)

    if omega_bar <= 0:
        raise EstimationError('Calibration weight is not positive: %g' %
                              omega_bar)

    return GodambeEstimate(theta, H, J, G, V, B_c, omega_bar, replications,
                           mc_se or {}, tuple(summary_cov))


def estimate_HJ(model, cl, theta, R=DEFAULT_REPLICATIONS, rng=None,
                workers=1, summaries=()):
    """
    Monte Carlo sensitivity and variability matrices at theta. Replicate r
    simulates from rng.spawn(r). Optional summaries are evaluated on the
    same replicates and their covariance is returned in summary_cov.
    """
    if R < MIN_REPLICATIONS:
        raise ValueError('At least %d replications are needed, got %d.' %
                         (MIN_REPLICATIONS, R))
    if R > MAX_REPLICATIONS:
        raise ValueError('At most %d replications are supported, got %d.' %
                         (MAX_REPLICATIONS, R))

    theta = _as_theta(theta)

    def replicate(r):
        gen = rng.spawn(r).generator()
        y = model.simulate(theta, gen)
        score = composite_score(cl, theta, y)
        jac = score_jacobian(cl, theta, y)
        extra = [np.atleast_1d(f(y)) for f in summaries]
        return score, jac, extra

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = list(pool.map(replicate, range(R)))

    scores = np.array([s for s, _, _ in results])
    hs = -np.array([j for _, j, _ in results])

    centred = scores - scores.mean(axis=0)
    products = np.einsum('ri,rj->rij', centred, centred)
    J = products.sum(axis=0) / (R - 1)
    H = hs.mean(axis=0)

    summary_cov = []
    for i in range(len(summaries)):
        values = np.array([extra[i] for _, _, extra in results])
        summary_cov.append(np.atleast_2d(np.cov(values, rowvar=False)))

    mc_se = {'H': hs.std(axis=0, ddof=1) / np.sqrt(R),
             'J': products.std(axis=0, ddof=1) / np.sqrt(R),
             'score_mean': scores.std(axis=0, ddof=1) / np.sqrt(R)}

    est = godambe_estimate(theta, H, J, R, mc_se, summary_cov)

    # delta method on omega_bar = tr(J H^-1)/d
    Hinv = inverse(est.H)
    A = Hinv @ est.J @ Hinv
    d = theta.shape[0]
    influence = (np.einsum('rij,ji->r', products - est.J, Hinv) -
                 np.einsum('rij,ji->r', hs - est.H, A)) / d
    mc_se['omega_bar'] = float(influence.std(ddof=1) / np.sqrt(R))

    log.info('Estimated H and J from %d replications: omega_bar = %.4f '
             '(se %.4f)', R, est.omega_bar, mc_se['omega_bar'])

    return est


def reparameterize(est, jacobian, theta):
    """
    Godambe estimate for a new parameter phi, given A = dtheta/dphi at the
    point theta (expressed in phi).
    """
    A = np.atleast_2d(np.asarray(jacobian, dtype=float))
    return godambe_estimate(theta, A.T @ est.H @ A, A.T @ est.J @ A,
                            est.replications)


def rescale_score(B_c, score):
    return solve_lower(B_c, score)


def adjust_score(H, J, score):
    return np.asarray(score) @ solve_spd(J, H)


def rescale_adjusted(H, B_c, g):
    # B_g = H (B_c^T)^-1
    B_g = solve_lower(B_c, H)
    return np.linalg.solve(B_g, np.asarray(g, dtype=float).T).T


def rescaled_score(est, cl, y):
    return rescale_score(est.B_c, composite_score(cl, est.theta, y))


def adjusted_score(est, cl, y):
    return adjust_score(est.H, est.J, composite_score(cl, est.theta, y))


def rescaled_adjusted_score(est, cl, y):
    return rescale_adjusted(est.H, est.B_c, adjusted_score(est, cl, y))


class RescaledScore(object):
    """Summary statistic y -> B_c^-1 · score(theta_obs; y)."""

    def __init__(self, est, cl):
        self.est = est
        self.cl = cl

    def __call__(self, y):
        return rescaled_score(self.est, self.cl, y)

    def batch(self, ys):
        scores = composite_score_batch(self.cl, self.est.theta, ys)
        return rescale_score(self.est.B_c, scores)
