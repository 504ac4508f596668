import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from scipy.integrate import trapezoid
from scipy.stats import wasserstein_distance

from locuskit.density import (
    DiffusionSchedule,
    NoiseSpec,
    conditional_kde,
    dae_chain,
    diffusion_generate,
    epanechnikov_inverse_cdf,
    gaussian_kde_log_gradient,
    gaussian_mixture_score,
    kde,
    kde_values,
    local_mean_denoiser,
    log_gaussian_kde,
    noise_sample,
    score_estimate,
    tweedie_denoise,
)
from locuskit.errors import InvalidParameter, InvalidSchedule, UnsampleableKernel
from locuskit.estimators import Dataset
from locuskit.kernel_core import dirac, epanechnikov, gaussian, uniform
from locuskit.shifts import mean_shift


def mixture_sample(n, rng, spread=0.1):
    half = n // 2
    return np.concatenate(
        [
            -2.0 + spread * rng.standard_normal(half),
            2.0 + spread * rng.standard_normal(n - half),
        ]
    )


class TestKde:
    def test_standard_normal_at_zero(self):
        assert kde(gaussian(1.0), [[0.0]], 0.0) == pytest.approx(0.39894, abs=1e-5)

    def test_outside_the_epanechnikov_support(self):
        assert kde(epanechnikov(0.5), [[0.0], [1.0]], 3.0) == 0.0

    def test_equidistant_query(self):
        single = kde(gaussian(0.7), [[0.0]], 1.0)
        assert kde(gaussian(0.7), [[0.0], [2.0]], 1.0) == pytest.approx(single)

    @pytest.mark.parametrize("k", [gaussian(0.4), epanechnikov(0.6)])
    def test_integrates_to_one(self, k, rng):
        X = rng.standard_normal(10)
        grid = np.linspace(-8.0, 8.0, 4001)
        assert trapezoid(kde_values(k, X, grid), grid) == pytest.approx(1.0, abs=1e-3)

    def test_uniform_has_no_density_form(self):
        with pytest.raises(InvalidParameter):
            kde(uniform(), [[0.0]], 0.0)


class TestConditionalKde:
    pairs = Dataset([0.0, 1.0, 2.5], y=[1.0, -0.5, 0.3])

    def test_dirac_picks_the_pair(self):
        value = conditional_kde(dirac(), gaussian(1.0), self.pairs, 1.0, 0.0)
        assert value == pytest.approx(kde(gaussian(1.0), [[-0.5]], 0.0))

    def test_constant_weight_is_the_marginal(self):
        value = conditional_kde(uniform(), gaussian(0.5), self.pairs, 7.0, 0.2)
        assert value == pytest.approx(kde(gaussian(0.5), self.pairs.y, 0.2))

    def test_double_sum_oracle(self):
        x, y, h1, h2 = 0.8, 0.1, 0.9, 0.6
        num = 0.0
        den = 0.0
        for xi, yi in zip(self.pairs.X[:, 0], self.pairs.y):
            w = np.exp(-((x - xi) ** 2) / (2 * h1**2))
            dens = np.exp(-((y - yi) ** 2) / (2 * h2**2)) / np.sqrt(2 * np.pi * h2**2)
            num += w * dens
            den += w
        value = conditional_kde(gaussian(h1), gaussian(h2), self.pairs, x, y)
        assert value == pytest.approx(num / den, abs=1e-12)

    def test_integrates_to_one_over_y(self):
        grid = np.linspace(-6.0, 6.0, 2401)
        values = [
            conditional_kde(gaussian(1.0), gaussian(0.5), self.pairs, 0.4, y)
            for y in grid
        ]
        assert trapezoid(values, grid) == pytest.approx(1.0, abs=1e-3)

    def test_marginalizing_x_recovers_the_marginal_of_y(self):
        k1, k2 = gaussian(0.5), gaussian(0.4)
        grid = np.linspace(-5.0, 7.5, 1251)
        px = kde_values(k1, self.pairs.X, grid)
        for ystar in (-0.5, 0.0, 0.9):
            cond = [conditional_kde(k1, k2, self.pairs, x, ystar) for x in grid]
            joint = trapezoid(np.array(cond) * px, grid)
            assert joint == pytest.approx(kde(k2, self.pairs.y, ystar), abs=1e-3)


class TestScoreEstimate:
    def test_symmetric_pair(self):
        assert_allclose(score_estimate(1.0, [[-1.0], [1.0]], 0.0), [0.0])

    def test_single_sample_is_the_gaussian_score(self):
        assert_allclose(score_estimate(0.5, [[2.0, 1.0]], [0.0, 0.0]), [8.0, 4.0])

    def test_finite_differences(self, rng):
        step = 1e-5
        for p in (1, 2, 3):
            X = rng.standard_normal((5, p))
            x = rng.standard_normal(p)
            fd = np.empty(p)
            for j in range(p):
                e = np.zeros(p)
                e[j] = step
                up = log_gaussian_kde(0.8, X, x + e)
                down = log_gaussian_kde(0.8, X, x - e)
                fd[j] = (up - down) / (2 * step)
            score = score_estimate(0.8, X, x)
            assert np.abs(score - fd).max() <= 1e-5 * np.abs(fd).max()

    def test_matches_the_analytic_gradient(self, rng):
        X = rng.standard_normal((30, 2))
        for x in rng.standard_normal((10, 2)):
            assert_allclose(
                score_estimate(0.6, X, x),
                gaussian_kde_log_gradient(0.6, X, x),
                rtol=1e-8,
                atol=1e-12,
            )


class TestTweedieDenoise:
    def test_single_atom_prior(self):
        for x in (-2.0, 0.3, 5.0):
            assert tweedie_denoise(1.0, lambda v: -v, x) == pytest.approx(0.0)

    def test_zero_score(self):
        assert_allclose(tweedie_denoise(0.3, np.zeros_like, [1.0, 2.0]), [1.0, 2.0])

    def test_two_atom_prior(self):
        sigma = 0.5

        def score(v):
            return gaussian_mixture_score([[-1.0], [1.0]], [0.5, 0.5], sigma, v)

        for x in np.linspace(-3.0, 3.0, 101):
            posterior = np.tanh(x / sigma**2)
            assert abs(tweedie_denoise(sigma, score, x)[0] - posterior) < 1e-8

    def test_single_gaussian_prior_recovers_the_atom(self):
        sigma = 0.4

        def score(v):
            return gaussian_mixture_score([[1.5]], [1.0], sigma, v)

        assert tweedie_denoise(sigma, score, 0.2)[0] == pytest.approx(1.5)

    def test_sigma_must_be_positive(self):
        with pytest.raises(InvalidParameter):
            tweedie_denoise(0.0, np.zeros_like, 1.0)


class TestNoiseSample:
    def test_vanishing_sigma(self, rng):
        X = rng.standard_normal((5, 2))
        assert_allclose(noise_sample("gaussian", X, 1, sigma=1e-300), X, rtol=1e-15)

    def test_mean_of_replicas(self):
        n = 100_000
        X = np.tile([1.0, -2.0], (n, 1))
        noised = noise_sample("gaussian", X, 7, sigma=1.0)
        assert np.all(np.abs(noised.mean(axis=0) - [1.0, -2.0]) < 4.0 / np.sqrt(n))

    def test_epanechnikov_support(self, rng):
        X = rng.standard_normal((500, 1))
        noised = noise_sample("kernel", X, 3, kernel=epanechnikov(0.25))
        assert np.all(np.abs(noised - X) <= 0.25 + 1e-12)

    def test_inverse_cdf_endpoints(self):
        assert_allclose(epanechnikov_inverse_cdf([0.0, 0.5, 1.0]), [-1.0, 0.0, 1.0])

    def test_dirac_cannot_be_sampled(self):
        with pytest.raises(UnsampleableKernel):
            noise_sample("kernel", [[0.0]], 1, kernel=dirac())

    def test_seeded_draws_repeat(self):
        a = noise_sample("gaussian", np.zeros((4, 2)), 11, sigma=0.5)
        b = noise_sample("gaussian", np.zeros((4, 2)), 11, sigma=0.5)
        assert_array_equal(a, b)


class TestDaeChain:
    def test_identity_without_noise(self):
        chain = dae_chain(lambda x: x, None, [0.5, -1.0], 4, seed=1)
        assert_array_equal(chain, np.tile([0.5, -1.0], (5, 1)))

    def test_noise_free_chain_is_a_mean_shift_path(self, rng):
        X = rng.standard_normal((15, 2))
        denoise = local_mean_denoiser(gaussian(), X)
        chain = dae_chain(denoise, None, X[0], 5, seed=1)
        path = mean_shift(gaussian(), X, queries=X[:1], tol=1e-300, max_iter=5)
        assert_allclose(chain, path.trajectories[0], atol=1e-12)

    def test_chain_visits_both_blobs(self):
        rng = np.random.default_rng(5)
        spread = 0.15 * rng.standard_normal(100)
        X = np.where(np.arange(100) < 50, -0.4, 0.4) + spread
        denoise = local_mean_denoiser(gaussian(0.2), X)
        noise = NoiseSpec(kind="gaussian", sigma=0.2)
        chain = dae_chain(denoise, noise, [0.4], 2000, seed=9)
        right = float((chain[:, 0] > 0).mean())
        assert 0.1 <= right <= 0.9

    def test_needs_a_step(self):
        with pytest.raises(InvalidParameter):
            dae_chain(lambda x: x, None, [0.0], 0, seed=1)


class TestDiffusionSchedule:
    def test_cumulative_factors(self):
        sched = DiffusionSchedule.linear(6)
        assert_allclose(sched.b, np.cumprod(sched.a))
        assert sched.s2[0] == pytest.approx(sched.sigma2[0])
        for t in range(1, 6):
            expected = sched.a[t] ** 2 * sched.s2[t - 1] + sched.sigma2[t]
            assert sched.s2[t] == pytest.approx(expected)

    def test_variance_preserving(self):
        sched = DiffusionSchedule.linear(20)
        assert_allclose(sched.b**2 + sched.s2, 1.0, atol=1e-12)

    @pytest.mark.parametrize(
        "a, sigma2",
        [([1.2], [0.1]), ([0.9], [0.0]), ([0.9, 0.8], [0.1]), ([], [])],
    )
    def test_invalid(self, a, sigma2):
        with pytest.raises(InvalidSchedule):
            DiffusionSchedule(a, sigma2)


class TestDiffusionGenerate:
    def test_noise_free_collapse_onto_the_data(self):
        X0 = np.array([[0.0], [1.0], [5.0]])
        sched = DiffusionSchedule([1.0], [1e-12])
        out = diffusion_generate(X0, sched, 20, seed=2, alpha=1.0)
        gaps = np.abs(out - X0[:, 0]).min(axis=1)
        assert np.all(gaps < 1e-12)

    def test_single_training_point(self):
        sched = DiffusionSchedule.linear(5)
        out = diffusion_generate([[3.0]], sched, 10, seed=2, alpha=1.0)
        assert_allclose(out, 3.0)

    def test_seeded_runs_repeat(self, rng):
        X0 = rng.standard_normal((30, 1))
        sched = DiffusionSchedule.linear(5)
        a = diffusion_generate(X0, sched, 40, seed=4)
        b = diffusion_generate(X0, sched, 40, seed=4)
        assert_array_equal(a, b)

    def test_two_mode_mixture(self):
        rng = np.random.default_rng(7)
        X0 = mixture_sample(200, rng)
        out = diffusion_generate(X0, DiffusionSchedule.linear(20), 500, seed=7)
        fresh = mixture_sample(500, np.random.default_rng(8))
        assert wasserstein_distance(out[:, 0], fresh) < 0.35
        left = float((out[:, 0] < 0).mean())
        assert 0.3 <= left <= 0.7

    def test_schedule_type_is_checked(self):
        with pytest.raises(InvalidSchedule):
            diffusion_generate([[0.0]], [0.5], 3, seed=1)
