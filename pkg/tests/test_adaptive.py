import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from scipy.special import softmax
from sklearn.metrics import r2_score

from locuskit.adaptive import (
    QkvHead,
    QkvParams,
    attention_from_features,
    finite_diff_gradcheck,
    fit_multikernel,
    fit_qkv,
    head_output,
    loo_kde_nll,
    loo_loss,
    multihead_reconstruct,
    project_simplex,
    qkv_objective,
    tune_bandwidth,
    visible_keys,
)
from locuskit.cli.datasets import bundled
from locuskit.cli.io import ingest_csv
from locuskit.errors import (
    InvalidParameter,
    NonFiniteLoss,
    NumericFailure,
    ShapeMismatch,
)
from locuskit.estimators import Dataset, lazy_transform
from locuskit.kernel_core import gaussian, gram, normalize_rows, uniform


def toy_tokens():
    return ingest_csv(bundled("toy-tokens"), "features-only").X


def hollow_residual(k, data):
    Kt = normalize_rows(gram(k, data.X).hollow()).values
    return data.y - Kt @ data.y


class TestTuneBandwidth:
    def test_constant_targets_take_the_smallest_h(self):
        data = Dataset([0.0, 1.0, 2.0, 3.0], y=[2.0] * 4)
        result = tune_bandwidth("local-mean", data, grid=[0.5, 0.1, 1.0])
        assert result.h == 0.1
        assert result.loss == pytest.approx(0.0, abs=1e-24)

    def test_two_points_tie_everywhere(self):
        data = Dataset([0.0, 1.0], y=[0.0, 1.0])
        result = tune_bandwidth("local-mean", data, grid=[0.3, 2.0, 0.05])
        assert result.h == 0.05
        assert_allclose(result.losses, 1.0)

    def test_single_grid_value(self, noisy_sine):
        result = tune_bandwidth("local-mean", noisy_sine, grid=[0.7])
        assert result.h == 0.7
        assert result.loss == pytest.approx(loo_loss("local-mean", 0.7, noisy_sine))

    def test_noisy_sine_interior_optimum(self, noisy_sine):
        grid = np.geomspace(0.01, 2.0, 20)
        result = tune_bandwidth("local-mean", noisy_sine, grid=grid)
        assert grid[0] < result.h < grid[-1]
        assert result.loss == result.losses.min()

        spacing = noisy_sine.X[1, 0] - noisy_sine.X[0, 0]
        x_test = noisy_sine.X[:-1, 0] + spacing / 2
        noise = 0.1 * np.random.default_rng(8).standard_normal(x_test.size)
        y_test = np.sin(x_test) + noise

        def r2(h):
            return r2_score(y_test, lazy_transform(gaussian(h), noisy_sine, x_test))

        worst_end = min(r2(grid[0]), r2(grid[-1]))
        assert r2(result.h) >= worst_end + 0.2

    def test_bracket(self, noisy_sine):
        result = tune_bandwidth("local-mean", noisy_sine, bracket=(0.05, 1.0))
        assert 0.05 <= result.h <= 1.0
        assert result.bracket == (0.05, 1.0)
        assert result.loss == result.losses.min()
        grid = tune_bandwidth("local-mean", noisy_sine, grid=[0.05, 1.0])
        assert result.loss <= grid.loss

    def test_local_linear(self, noisy_sine):
        result = tune_bandwidth("local-linear", noisy_sine, grid=[0.05, 0.3, 3.0])
        assert result.h < 3.0
        assert result.losses[1] < result.losses[2]

    def test_kde_leave_one_out(self, rng):
        data = Dataset(rng.standard_normal(200))
        result = tune_bandwidth("kde-loo", data, grid=[1e-3, 0.3, 50.0])
        assert result.h == 0.3

    def test_kde_leave_one_out_two_points(self):
        # each point sees only the other, at distance 1
        expected = 0.5 + 0.5 * np.log(2.0 * np.pi)
        assert loo_kde_nll(1.0, [[0.0], [1.0]]) == pytest.approx(expected)
        with pytest.raises(InvalidParameter):
            loo_kde_nll(1.0, [[0.0]])

    def test_underflowing_candidates_score_infinity(self, noisy_sine):
        result = tune_bandwidth("local-mean", noisy_sine, grid=[1e-4, 0.5])
        assert result.h == 0.5
        assert np.isinf(result.losses[0])

    def test_every_candidate_fails(self, noisy_sine):
        with pytest.raises(NumericFailure):
            tune_bandwidth("local-mean", noisy_sine, grid=[1e-4])

    @pytest.mark.parametrize(
        "kwargs",
        [
            {},
            {"grid": [0.1], "bracket": (0.1, 1.0)},
            {"grid": [0.1, -1.0]},
            {"bracket": (1.0, 0.5)},
        ],
    )
    def test_invalid_search(self, noisy_sine, kwargs):
        with pytest.raises(InvalidParameter):
            tune_bandwidth("local-mean", noisy_sine, **kwargs)

    def test_unknown_predictor(self, noisy_sine):
        with pytest.raises(InvalidParameter):
            tune_bandwidth("nadaraya", noisy_sine, grid=[0.1])


class TestProjectSimplex:
    @pytest.mark.parametrize(
        "v, expected",
        [
            ([0.5, 0.5], [0.5, 0.5]),
            ([2.0, 0.0], [1.0, 0.0]),
            ([-1.0, 3.0, 0.0], [0.0, 1.0, 0.0]),
            ([1.0, 1.0, 1.0], [1 / 3, 1 / 3, 1 / 3]),
        ],
    )
    def test_examples(self, v, expected):
        assert_allclose(project_simplex(v), expected, atol=1e-12)


class TestFitMultikernel:
    groups = Dataset(
        [0.0, 0.1, 0.2, 10.0, 10.1, 10.2], y=[1.0, 1.0, 1.0, 5.0, 5.0, 5.0]
    )

    def test_identical_kernels_keep_uniform_weights(self, noisy_sine):
        fit = fit_multikernel([gaussian(0.5), gaussian(0.5)], noisy_sine)
        assert_allclose(fit.weights, [0.5, 0.5], atol=1e-9)

    def test_good_kernel_takes_the_weight(self):
        fit = fit_multikernel([gaussian(0.5), uniform()], self.groups)
        assert fit.weights[0] >= 0.99
        assert fit.objective < 1e-20

    def test_weights_stay_on_the_simplex(self, noisy_sine):
        kernels = [gaussian(0.05), gaussian(0.3), gaussian(1.0)]
        fit = fit_multikernel(kernels, noisy_sine)
        assert np.all(fit.weights >= 0)
        assert fit.weights.sum() == pytest.approx(1.0, abs=1e-10)

    def test_mixture_beats_both_vertices(self, noisy_sine):
        k1, k2 = gaussian(0.05), gaussian(1.0)
        a1 = hollow_residual(k1, noisy_sine)
        a2 = hollow_residual(k2, noisy_sine)
        fit = fit_multikernel([k1, k2], noisy_sine)
        assert fit.objective <= min(a1 @ a1, a2 @ a2) + 1e-12

        diff = a1 - a2
        w = np.clip(-(a2 @ diff) / (diff @ diff), 0.0, 1.0)
        r = w * a1 + (1 - w) * a2
        assert fit.objective == pytest.approx(r @ r, rel=1e-6)
        assert_allclose(fit.weights, [w, 1 - w], atol=1e-4)

    def test_needs_two_kernels(self, noisy_sine):
        with pytest.raises(InvalidParameter):
            fit_multikernel([gaussian()], noisy_sine)


class TestAttention:
    def test_softmax_rows_sum_to_one(self, rng):
        Q, K = rng.standard_normal((2, 4, 3))
        A, empty, _ = attention_from_features(Q, K, "softmax", visible_keys(4))
        assert_allclose(A.sum(axis=1), 1.0)
        assert not empty.any()

    def test_hollow_mask(self, rng):
        Q, K = rng.standard_normal((2, 5, 2))
        A, _, _ = attention_from_features(
            Q, K, "linear", visible_keys(5, hollow=True)
        )
        assert_array_equal(np.diag(A), 0.0)
        assert_allclose(A.sum(axis=1), 1.0)

    def test_causal_hollow_first_row_is_empty(self, rng):
        Q, K = rng.standard_normal((2, 3, 2))
        visible = visible_keys(3, causal=True, hollow=True)
        assert_array_equal(visible, [[0, 0, 0], [1, 0, 0], [1, 1, 0]])
        A, empty, _ = attention_from_features(Q, K, "softmax", visible)
        assert_array_equal(empty, [True, False, False])
        assert_array_equal(A[0], 0.0)

    def test_softmax_ignores_a_common_key_offset(self, rng):
        Q, K = rng.standard_normal((2, 4, 3))
        u = rng.standard_normal(3)
        visible = visible_keys(4)
        A, _, _ = attention_from_features(Q, K, "softmax", visible)
        B, _, _ = attention_from_features(Q, K + u, "softmax", visible)
        assert_allclose(A, B, atol=1e-12)

    def test_zero_features_average_the_values(self, rng):
        V = rng.standard_normal((5, 2))
        head = QkvHead(phi=np.zeros((5, 2)), psi=np.zeros((5, 2)), values=V)
        H = head_output(head, "softmax")
        assert_allclose(H, np.tile(V.mean(axis=0), (5, 1)))


class TestFitQkv:
    def test_zero_init_loss_is_the_spread_of_the_values(self):
        V = toy_tokens()
        fit = fit_qkv(V, 2, init="zeros", hollow=False, steps=1)
        assert fit.trace[0] == pytest.approx(((V - V.mean(axis=0)) ** 2).sum())

    def test_identical_rows(self):
        V = np.tile([1.0, 2.0], (5, 1))
        fit = fit_qkv(V, 2, steps=20, seed=1)
        assert max(fit.trace) <= 1e-12

    def test_toy_tokens_halve_the_loss(self):
        fit = fit_qkv(toy_tokens(), 2, "softmax", lr=0.1, steps=500, seed=7)
        assert len(fit.trace) == 501
        assert fit.loss < 0.5 * fit.trace[0]
        assert fit.params.d == 2 and fit.params.M == 1

    def test_seeded_runs_repeat(self):
        a = fit_qkv(toy_tokens(), 2, "linear", steps=30, seed=4)
        b = fit_qkv(toy_tokens(), 2, "linear", steps=30, seed=4)
        assert a.trace == b.trace
        assert_array_equal(a.params.heads[0].phi, b.params.heads[0].phi)

    def test_non_finite_loss(self):
        V = np.array([[np.inf, 0.0], [0.0, 1.0], [1.0, 1.0]])
        with np.errstate(all="ignore"), pytest.raises(NonFiniteLoss) as err:
            fit_qkv(V, 2, steps=5)
        assert err.value.step == 0
        assert len(err.value.trace) == 1

    def test_learned_values_need_a_target(self):
        with pytest.raises(InvalidParameter):
            fit_qkv(toy_tokens(), 2, learn_values=True)

    def test_unknown_form(self):
        with pytest.raises(InvalidParameter):
            fit_qkv(toy_tokens(), 2, form="cosine")


class TestQkvGradients:
    @pytest.mark.parametrize("form", ["softmax", "linear"])
    def test_value_reconstruction(self, form, rng):
        V = toy_tokens()
        arrays = {
            "phi0": 0.5 * rng.standard_normal((6, 2)),
            "psi0": 0.5 * rng.standard_normal((6, 2)),
        }
        objective = qkv_objective(V, form)
        assert finite_diff_gradcheck(objective, arrays) < 1e-4

    def test_decoded_multi_head(self, rng):
        V = toy_tokens()
        X = rng.standard_normal((6, 3))
        arrays = {}
        for m in range(2):
            arrays[f"phi{m}"] = 0.5 * rng.standard_normal((6, 2))
            arrays[f"psi{m}"] = 0.5 * rng.standard_normal((6, 2))
            arrays[f"values{m}"] = V + 0.1 * rng.standard_normal((6, 2))
            arrays[f"decoder{m}"] = rng.standard_normal((3, 2))
        objective = qkv_objective(V, "softmax", target=X)
        assert finite_diff_gradcheck(objective, arrays) < 1e-4

    def test_causal_sequence_with_positions(self, rng):
        V = toy_tokens()
        tokens = [0, 3, 1, 4, 2]
        positions = 0.3 * rng.standard_normal((5, 2))
        arrays = {
            "phi0": 0.5 * rng.standard_normal((6, 2)),
            "psi0": 0.5 * rng.standard_normal((6, 2)),
        }
        objective = qkv_objective(
            V, "linear", tokens=tokens, positions=positions, causal=True
        )
        assert finite_diff_gradcheck(objective, arrays) < 1e-4


class TestMultiheadReconstruct:
    def head(self, rng, decoder=None):
        return QkvHead(
            phi=rng.standard_normal((4, 2)),
            psi=rng.standard_normal((4, 2)),
            values=rng.standard_normal((4, 3)),
            decoder=decoder,
        )

    def test_identical_heads_match_one_head(self, rng):
        head = self.head(rng, decoder=rng.standard_normal((3, 3)))
        X = np.zeros((4, 3))
        one = multihead_reconstruct(QkvParams(heads=(head,), form="softmax"), X)
        two = multihead_reconstruct(QkvParams(heads=(head, head), form="softmax"), X)
        assert_allclose(two, one)

    def test_opposite_decoders_cancel(self, rng):
        head = self.head(rng, decoder=rng.standard_normal((3, 3)))
        mirror = QkvHead(
            phi=head.phi, psi=head.psi, values=head.values, decoder=-head.decoder
        )
        params = QkvParams(heads=(head, mirror), form="linear")
        assert_allclose(multihead_reconstruct(params, np.zeros((4, 3))), 0.0)

    def test_two_heads_by_hand(self, rng):
        heads = (
            self.head(rng, decoder=rng.standard_normal((3, 3))),
            self.head(rng, decoder=rng.standard_normal((3, 3))),
        )
        expected = np.zeros((4, 3))
        for head in heads:
            A = softmax(head.phi @ head.psi.T / np.sqrt(2.0), axis=1)
            expected += (A @ head.values) @ head.decoder.T / 2
        params = QkvParams(heads=heads, form="softmax")
        assert_allclose(multihead_reconstruct(params, np.zeros((4, 3))), expected)

    def test_plain_mean_without_decoders(self, rng):
        heads = (self.head(rng), self.head(rng))
        params = QkvParams(heads=heads, form="softmax")
        expected = sum(head_output(h, "softmax") for h in heads) / 2
        assert_allclose(multihead_reconstruct(params, np.zeros((4, 3))), expected)

    def test_reconstruction_shape_must_match(self, rng):
        params = QkvParams(heads=(self.head(rng),), form="softmax")
        with pytest.raises(ShapeMismatch):
            multihead_reconstruct(params, np.zeros((4, 2)))

    def test_mismatched_feature_shapes(self, rng):
        head = QkvHead(
            phi=np.zeros((4, 2)), psi=np.zeros((4, 3)), values=np.zeros((4, 3))
        )
        with pytest.raises(ShapeMismatch):
            QkvParams(heads=(head,), form="softmax")

    def test_decoders_on_some_heads_only(self, rng):
        heads = (self.head(rng, decoder=np.eye(3)), self.head(rng))
        with pytest.raises(ShapeMismatch):
            QkvParams(heads=heads, form="softmax")


class TestFiniteDiffGradcheck:
    def test_quadratic(self):
        a = np.array([1.0, 3.0, 0.5])

        def objective(params):
            p = params["p"]
            return float((a * p**2).sum()), {"p": 2 * a * p}

        error = finite_diff_gradcheck(objective, {"p": [1.0, -2.0, 0.5]})
        assert error < 1e-9

    def test_constant_objective(self):
        def objective(params):
            return 4.0, {"p": np.zeros(2)}

        assert finite_diff_gradcheck(objective, {"p": [0.3, 0.7]}) == 0.0

    def test_wrong_gradient_is_flagged(self):
        def objective(params):
            p = params["p"]
            return float((p**2).sum()), {"p": p}

        error = finite_diff_gradcheck(objective, {"p": [1.0, 2.0]})
        assert error == pytest.approx(1.0, rel=1e-6)

    @pytest.mark.parametrize("eps", [1e-9, 1e-2])
    def test_step_out_of_range(self, eps):
        with pytest.raises(InvalidParameter):
            finite_diff_gradcheck(lambda p: (0.0, {}), {"p": [1.0]}, eps=eps)
