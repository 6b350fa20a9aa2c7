import numpy as np
import pytest

from numpy.testing import assert_allclose

from abccs.estimating import (MAX_REPLICATIONS, CompositeLikelihood,
                              ConvergenceError, EstimationError,
                              RescaledScore, adjust_score,
                              calibration_weight, composite_score,
                              composite_score_batch, estimate_HJ,
                              godambe_estimate, reparameterize,
                              rescale_adjusted, rescale_score,
                              rescaled_adjusted_score, rescaled_score,
                              score_jacobian, solve_mcle)
from abccs.models import Equicorr, NormalParabola, Probit, Smith, grid_coords
from abccs.models.equicorr import from_natural
from abccs.numkernel import RngStream, cholesky

from conftest import random_spd


Q = np.array([[2.0, 0.5], [0.5, 1.0]])
C = np.array([1.0, -2.0])


def quadratic(theta, y):
    d = np.asarray(theta) - C
    return -0.5 * d @ Q @ d


class TestScore:
    def test_finite_differences(self):
        cl = CompositeLikelihood(quadratic, dim=2)
        theta = np.array([0.3, 0.7])
        assert_allclose(composite_score(cl, theta, None), -Q @ (theta - C),
                        atol=1e-7)

    def test_closed_form_preferred(self):
        cl = CompositeLikelihood(quadratic, lambda t, y: np.array([1.0, 2.0]),
                                 dim=2)
        assert_allclose(composite_score(cl, [0.0, 0.0], None), [1.0, 2.0])

    def test_hessian(self):
        cl = CompositeLikelihood(quadratic, dim=2)
        assert_allclose(score_jacobian(cl, [0.3, 0.7], None), -Q, atol=1e-5)

    def test_batch_marks_failures(self):
        def logcl(theta, y):
            return -np.inf if y < 0 else -0.5 * (theta[0] - y) ** 2

        cl = CompositeLikelihood(logcl, dim=1)
        scores = composite_score_batch(cl, [0.0], [1.0, -1.0, 2.0])
        assert_allclose(scores[[0, 2], 0], [1.0, 2.0], atol=1e-6)
        assert np.isnan(scores[1, 0])

    def test_gaussian_batch(self, gaussian, gen):
        cl = gaussian.composite()
        ys = gen.standard_normal((5, gaussian.n))
        assert_allclose(composite_score_batch(cl, [0.0], ys)[:, 0],
                        ys.sum(axis=1))


class TestMcle:
    def test_quadratic(self):
        cl = CompositeLikelihood(quadratic, dim=2)
        assert_allclose(solve_mcle(cl, None, [5.0, 5.0]), C, atol=1e-5)

    def test_parabola(self):
        cl = NormalParabola(2).composite()
        theta = solve_mcle(cl, np.array([1.0, -1.0]), [0.5])
        assert abs(theta[0] - 1.0) < 1e-6

    def test_gaussian_mean(self, gaussian, gen):
        y = 3.0 + gen.standard_normal(gaussian.n)
        theta = solve_mcle(gaussian.composite(), y, [0.0])
        assert abs(theta[0] - y.mean()) < 1e-6

    def test_infinite_start(self):
        cl = CompositeLikelihood(lambda t, y: -np.inf, dim=1)
        with pytest.raises(ValueError):
            solve_mcle(cl, None, [0.0])

    def test_unbounded(self):
        cl = CompositeLikelihood(lambda t, y: float(t[0]),
                                 lambda t, y: np.array([1.0]), dim=1)
        with pytest.raises(ConvergenceError):
            solve_mcle(cl, None, [0.0], max_evaluations=200)


class TestGodambe:
    def test_scalar_rescaling(self):
        assert_allclose(rescale_score([[2.0]], [6.0]), [3.0])

    def test_calibration_weight(self):
        est = godambe_estimate([1.0], [[3.0]], [[6.0]])
        assert calibration_weight(est) == pytest.approx(2.0)
        assert est.omega_bar == pytest.approx(2.0)

    def test_derived_matrices(self, gen):
        H = random_spd(gen, 3)
        J = random_spd(gen, 3)
        est = godambe_estimate(np.zeros(3), H, J)

        assert_allclose(est.B_c @ est.B_c.T, J, rtol=1e-10)
        assert_allclose(est.G @ est.V, np.eye(3), atol=1e-9)
        assert_allclose(est.omega_bar,
                        np.trace(J @ np.linalg.inv(H)) / 3, rtol=1e-10)

    def test_singular_sensitivity(self):
        with pytest.raises(EstimationError):
            godambe_estimate([0.0, 0.0], [[1.0, 1.0], [1.0, 1.0]], np.eye(2))

    def test_indefinite_variability(self):
        with pytest.raises(EstimationError):
            godambe_estimate([0.0, 0.0], np.eye(2), [[1.0, 2.0], [2.0, 1.0]])

    def test_adjusted_score_identity(self, gen):
        for d in (1, 2, 3, 5):
            H = random_spd(gen, d)
            J = random_spd(gen, d)
            s = gen.standard_normal(d)
            B_c = cholesky(J)

            eta_c = rescale_score(B_c, s)
            eta_g = rescale_adjusted(H, B_c, adjust_score(H, J, s))

            assert_allclose(eta_g, eta_c, atol=1e-8)

    def test_rescaled_norm(self, gen):
        J = random_spd(gen, 4)
        s = gen.standard_normal(4)
        eta = rescale_score(cholesky(J), s)
        assert eta @ eta == pytest.approx(s @ np.linalg.solve(J, s),
                                          rel=1e-10)

    def test_rows(self, gen):
        J = random_spd(gen, 3)
        B_c = cholesky(J)
        s = gen.standard_normal((6, 3))
        rows = rescale_score(B_c, s)
        for i in range(6):
            assert_allclose(rows[i], rescale_score(B_c, s[i]), atol=1e-12)


class TestReparameterize:
    def test_log_scale(self):
        est = godambe_estimate([2.0], [[3.0]], [[5.0]])
        phi = reparameterize(est, [[2.0]], [np.log(2.0)])
        s = 1.7

        assert_allclose(rescale_score(phi.B_c, [2.0 * s]),
                        rescale_score(est.B_c, [s]))
        assert phi.omega_bar == pytest.approx(est.omega_bar)

    def test_diagonal(self, gen):
        est = godambe_estimate(np.zeros(2), random_spd(gen, 2),
                               random_spd(gen, 2))
        A = np.diag([0.5, 3.0])
        phi = reparameterize(est, A, np.zeros(2))
        s = gen.standard_normal(2)

        assert_allclose(rescale_score(phi.B_c, A.T @ s),
                        rescale_score(est.B_c, s), atol=1e-10)
        assert phi.omega_bar == pytest.approx(est.omega_bar)


class TestMonteCarlo:
    def test_too_few_replications(self, gaussian):
        with pytest.raises(ValueError):
            estimate_HJ(gaussian, gaussian.composite(), [0.0], 50,
                        RngStream(1, 0))

    def test_full_likelihood(self, gaussian):
        est = estimate_HJ(gaussian, gaussian.composite(), [0.5], 400,
                          RngStream(3, 100000))

        assert_allclose(est.H, [[20.0]], rtol=1e-6)
        assert abs(est.J[0, 0] - 20.0) < 4 * est.mc_se['J'][0, 0]
        assert abs(est.omega_bar - 1.0) < 0.3
        assert est.replications == 400

    def test_workers_do_not_change_result(self, gaussian):
        cl = gaussian.composite()
        a = estimate_HJ(gaussian, cl, [0.5], 120, RngStream(3, 0), workers=1)
        b = estimate_HJ(gaussian, cl, [0.5], 120, RngStream(3, 0), workers=4)
        assert np.array_equal(a.J, b.J)
        assert np.array_equal(a.H, b.H)

    def test_summary_covariance(self, gaussian):
        est = estimate_HJ(gaussian, gaussian.composite(), [0.0], 300,
                          RngStream(5, 0), summaries=(np.mean,))
        # var(ybar) = 1/n
        assert abs(est.summary_cov[0][0, 0] - 0.05) < 0.015

    @pytest.mark.slow
    def test_information_identity(self, gaussian):
        est = estimate_HJ(gaussian, gaussian.composite(), [0.5], 2000,
                          RngStream(11, 0))
        assert abs(est.J[0, 0] - 20.0) < 3 * est.mc_se['J'][0, 0]
        assert abs(est.omega_bar - 1.0) < 0.1

    @pytest.mark.slow
    def test_probit_misspecification(self):
        model = Probit(n=100, q=10, seed=11)
        cl = model.composite()
        theta = np.array([0.5, 1.5, np.log(4.0)])
        est = estimate_HJ(model, cl, theta, 1000, RngStream(12, 100000),
                          workers=4)

        assert abs(est.omega_bar - 1.0) > 3 * est.mc_se['omega_bar']
        gap = np.linalg.norm(est.H - est.J)
        noise = np.sqrt((est.mc_se['H'] ** 2 + est.mc_se['J'] ** 2).sum())
        assert gap > 5 * noise

        gen = RngStream(13, 0).generator()
        for _ in range(100):
            point = theta + gen.normal(0.0, [0.3, 0.3, 0.5])
            y = model.simulate(point, gen)
            eta_c = rescaled_score(est, cl, y)
            assert_allclose(rescaled_adjusted_score(est, cl, y), eta_c,
                            rtol=1e-8, atol=1e-8 * (1 + np.abs(eta_c).max()))

    def test_too_many_replications(self, gaussian):
        with pytest.raises(ValueError):
            estimate_HJ(gaussian, gaussian.composite(), [0.0],
                        MAX_REPLICATIONS + 1, RngStream(1, 0))


class TestRescaledScore:
    def test_parabola(self, parabola):
        est = parabola.exact_godambe(np.array([5.0]))
        summary = RescaledScore(est, parabola.composite())
        y = np.full(50, 5.0)
        # score(5; y) = -250/25 + 1250/125 - 50/5 = -10, i(5) = 6
        assert_allclose(summary(y), [-10 / np.sqrt(6.0)])

    def test_batch_matches_rows(self, parabola, gen):
        est = parabola.exact_godambe(np.array([4.0]))
        summary = RescaledScore(est, parabola.composite())
        ys = 4.0 + 4.0 * gen.standard_normal((7, 50))
        batch = summary.batch(ys)
        for i in range(7):
            assert_allclose(batch[i], summary(ys[i]), rtol=1e-12)


UNBIASED = [
    (NormalParabola(50), [5.0]),
    (Equicorr(n=30, q=5), from_natural(0.0, 1.0, 0.5, 5)),
    (Probit(n=30, q=4, seed=11), [0.5, 1.5, np.log(4.0)]),
    (Smith(grid_coords(3, 10.0), n=20),
     [20.0, 5.0, 15.0, 30.0, 0.1, -0.05, 10.0, 0.02, 0.01, 0.1]),
]


@pytest.mark.slow
@pytest.mark.parametrize('model, theta', UNBIASED,
                         ids=[m.name for m, _ in UNBIASED])
def test_score_is_unbiased(model, theta):
    cl = model.composite()
    theta = np.asarray(theta, dtype=float)
    scores = np.array([composite_score(cl, theta,
                                       model.simulate(theta, RngStream(21, r)))
                       for r in range(500)])

    z = scores.mean(axis=0) / (scores.std(axis=0, ddof=1) / np.sqrt(500))
    assert np.all(np.abs(z) < 3)
