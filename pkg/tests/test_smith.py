import numpy as np
import pytest

from numpy.testing import assert_allclose
from scipy.stats import kstest

from abccs.models import DomainError, Smith
from abccs.models import grid_coords
from abccs.models.smith import (bvcdf, extremal_coeff, frechet_to_gev,
                                gev_to_frechet, mahalanobis, pair_lags,
                                pair_logdensity, simulate_frechet)
from abccs.numkernel import RngStream


THETA = np.array([20.0, 5.0, 15.0, 30.0, 0.1, -0.05, 10.0, 0.02, 0.01, 0.1])


@pytest.fixture
def smith():
    return Smith(grid_coords(3, 10.0), n=60)


class TestExtremalCoefficient:
    def test_known_value(self):
        assert extremal_coeff([2.0, 0.0], np.eye(2)) == \
            pytest.approx(1.6826894921370859, abs=1e-10)

    def test_complete_dependence(self):
        assert extremal_coeff([0.0, 0.0], np.eye(2)) == 1.0

    def test_bounds(self, gen):
        for _ in range(20):
            a = gen.standard_normal((2, 2))
            sigma = a @ a.T + 0.1 * np.eye(2)
            delta = extremal_coeff(gen.normal(0, 5, (50, 2)), sigma)
            assert np.all((delta >= 1) & (delta <= 2))

    def test_increasing_in_distance(self, gen):
        sigma = np.array([[20.0, 5.0], [5.0, 15.0]])
        lags = gen.normal(0.0, 10.0, (500, 2))
        a = mahalanobis(lags, sigma)
        order = np.argsort(a)

        assert np.all(np.diff(a[order]) > 0)
        assert np.all(np.diff(extremal_coeff(lags[order], sigma)) > 0)

    def test_mahalanobis(self):
        sigma = np.array([[4.0, 0.0], [0.0, 1.0]])
        assert_allclose(mahalanobis([[2.0, 0.0], [0.0, 3.0]], sigma),
                        [1.0, 3.0])

    def test_pair_lags(self):
        lags, distances = pair_lags([[0.0, 0.0], [3.0, 4.0], [0.0, 1.0]])
        assert_allclose(lags, [[-3.0, -4.0], [0.0, -1.0], [3.0, 3.0]])
        assert_allclose(distances, [5.0, 1.0, np.sqrt(18.0)])


class TestBivariate:
    def test_equal_levels(self):
        h, sigma = np.array([1.0, 1.0]), np.eye(2)
        for z in (0.5, 1.0, 3.0):
            assert bvcdf(z, z, h, sigma) == pytest.approx(
                np.exp(-extremal_coeff(h, sigma) / z), rel=1e-12)

    def test_marginal_limit(self):
        assert bvcdf(2.0, np.inf, [1.0, 0.0], np.eye(2)) == \
            pytest.approx(np.exp(-0.5), rel=1e-12)

    def test_density_is_mixed_derivative(self):
        h, sigma = np.array([1.5, 0.0]), np.eye(2)
        zk, zl, e = 1.3, 0.8, 1e-4

        def F(a, b):
            return bvcdf(a, b, h, sigma)

        fd = (F(zk + e, zl + e) - F(zk + e, zl - e) - F(zk - e, zl + e) +
              F(zk - e, zl - e)) / (4 * e * e)
        assert np.exp(pair_logdensity(zk, zl, 1.5)) == \
            pytest.approx(fd, rel=1e-5)


class TestMargins:
    def test_gumbel_branch(self, gen):
        y = gen.normal(30, 5, 20)
        z0, logjac0, valid = gev_to_frechet(y, 30.0, 10.0, 0.0)
        z1, logjac1, _ = gev_to_frechet(y, 30.0, 10.0, 1e-7)
        assert np.all(valid)
        assert_allclose(z0, np.exp((y - 30.0) / 10.0))
        assert_allclose(z1, z0, rtol=1e-5)
        assert_allclose(logjac1, logjac0, atol=1e-5)

    @pytest.mark.parametrize('xi', [-0.2, 0.0, 0.3])
    def test_inverse(self, gen, xi):
        z = 1 / gen.exponential(size=10)
        y = frechet_to_gev(z, 30.0, 10.0, xi)
        back, _, valid = gev_to_frechet(y, 30.0, 10.0, xi)
        assert np.all(valid)
        assert_allclose(back, z, rtol=1e-10)

    def test_support(self):
        _, _, valid = gev_to_frechet([0.0, 30.0], 30.0, 10.0, 0.5)
        assert valid.tolist() == [False, True]


class TestSimulation:
    def test_unit_frechet_margins(self):
        coords = grid_coords(3, 10.0)
        sigma = np.array([[20.0, 5.0], [5.0, 15.0]])
        z = simulate_frechet(coords, sigma, 2000, RngStream(4, 0))
        assert z.shape == (2000, 9)
        for k in range(9):
            assert kstest(z[:, k], 'invweibull', args=(1,)).pvalue > 0.01

    @pytest.mark.slow
    def test_pairwise_dependence(self):
        coords = grid_coords(3, 10.0)
        sigma = np.array([[100.0, 30.0], [30.0, 60.0]])
        z = simulate_frechet(coords, sigma, 10000, RngStream(5, 0))
        for k, l in ((0, 1), (0, 4), (0, 8)):
            joint = np.mean((z[:, k] <= 1) & (z[:, l] <= 1))
            delta = extremal_coeff(coords[k] - coords[l], sigma)
            assert abs(-np.log(joint) - delta) < 0.05

    def test_not_positive_definite(self):
        with pytest.raises(DomainError):
            simulate_frechet(grid_coords(2, 1.0), [[1.0, 2.0], [2.0, 1.0]],
                             5, RngStream(0, 0))

    def test_deterministic(self, smith):
        a = smith.simulate(THETA, RngStream(6, 0))
        b = smith.simulate(THETA, RngStream(6, 0))
        assert a.shape == (60, 9)
        assert np.array_equal(a, b)


class TestPairwise:
    def test_finite_at_truth(self, smith):
        y = smith.simulate(THETA, RngStream(7, 0))
        assert np.isfinite(smith.pairwise_loglik(THETA, y))

    def test_batched(self, smith):
        y = smith.simulate(THETA, RngStream(7, 0))
        ys = np.stack([y, y[::-1]])
        values = smith.pairwise_loglik(THETA, ys)
        assert values.shape == (2,)
        assert values[0] == pytest.approx(values[1])

    def test_outside_support(self, smith):
        y = smith.simulate(THETA, RngStream(7, 0))
        bad = THETA.copy()
        bad[1] = 30.0
        assert smith.pairwise_loglik(bad, y) == -np.inf

        # below the lower GEV bound mu - lambda / xi at station 0
        y[0, 0] = 30.0 - 200.0
        assert smith.pairwise_loglik(THETA, y) == -np.inf

    def test_initial(self, smith):
        y = smith.simulate(THETA, RngStream(8, 0))
        init = smith.initial(y)
        assert init.shape == (10,)
        assert smith.prior.in_support(init)
        assert np.isfinite(smith.pairwise_loglik(init, y))


class TestPrior:
    def test_support(self, smith):
        assert smith.prior.in_support(THETA)
        assert smith.prior.logpdf(THETA) == 0.0

    @pytest.mark.parametrize('index, value', [(0, -1.0), (1, 30.0),
                                              (2, 1200.0), (9, -0.1),
                                              (6, -5.0)])
    def test_outside(self, smith, index, value):
        theta = THETA.copy()
        theta[index] = value
        assert not smith.prior.in_support(theta)
        with pytest.raises(DomainError):
            smith.check_theta(theta)

    def test_improper(self, smith):
        assert not smith.prior.proper
        with pytest.raises(NotImplementedError):
            smith.prior.sample(RngStream(0, 0), 10)

    def test_duplicate_stations(self):
        with pytest.raises(ValueError):
            Smith([[0.0, 0.0], [1.0, 1.0], [0.0, 0.0]])
