import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from scipy.stats import spearmanr
from sklearn.datasets import make_swiss_roll

from locuskit.embedding import (
    amds_factorize,
    contrast,
    cooccurrence_counts,
    cooccurrence_embed,
    lle_embed,
    lle_objective,
    lle_weights,
    pca_embed,
    read_corpus,
    sample_triplets,
    similarity_matrix,
    trimap_embed,
    trimap_objective,
)
from locuskit.errors import (
    EmptyCorpus,
    InvalidParameter,
    NegativeInputForNMF,
    NotSquare,
)
from locuskit.kernel_core import epanechnikov, gaussian, gram, normalize_rows


class TestLleWeights:
    def test_single_neighbour_takes_all_weight(self):
        W = lle_weights([0.0, 1.0, 3.0], 1).values
        assert W[0, 1] == 1.0
        assert W[2, 1] == 1.0

    def test_midpoint(self):
        W = lle_weights([0.0, 1.0, 2.0], 2).values
        assert_allclose(W[1], [0.5, 0.0, 0.5], atol=1e-9)

    def test_exact_reconstruction(self):
        X = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [0.5, 0.5]])
        W = lle_weights(X, 4).values
        assert np.linalg.norm(X[4] - W[4] @ X) < 1e-8

    def test_row_structure(self, rng):
        X = rng.standard_normal((25, 3))
        W = lle_weights(X, 5).values
        assert_allclose(W.sum(axis=1), 1.0)
        assert_array_equal(np.diag(W), 0.0)
        assert np.all(W >= 0)
        assert np.all((W > 0).sum(axis=1) <= 5)

    def test_translation_invariance(self, rng):
        X = rng.standard_normal((20, 2))
        a = lle_weights(X, 2).values
        b = lle_weights(X + [10.0, -3.0], 2).values
        assert_allclose(a, b, atol=1e-8)

    @pytest.mark.parametrize("K_nn", [0, 3])
    def test_neighbour_count(self, K_nn):
        with pytest.raises(InvalidParameter):
            lle_weights([0.0, 1.0, 2.0], K_nn)


class TestLleEmbed:
    def test_identity_has_zero_objective(self):
        result = lle_embed(np.eye(6), 2)
        assert result.objective == pytest.approx(0.0, abs=1e-12)
        assert result.Z.shape == (6, 2)

    def test_orthogonality(self, rng):
        X = rng.standard_normal((40, 3))
        result = lle_embed(lle_weights(X, 6), 2)
        assert_allclose(result.Z.T @ result.Z / 40, np.eye(2), atol=1e-8)
        assert_allclose(result.Z.sum(axis=0), 0.0, atol=1e-8)

    def test_line_is_recovered_in_order(self):
        t = np.linspace(0.0, 1.0, 30)
        X = np.column_stack([t, 2.0 * t])
        Kt = normalize_rows(epanechnikov(0.15).matrix(X))
        Z = lle_embed(Kt, 1).Z[:, 0]
        assert abs(spearmanr(Z, t)[0]) == pytest.approx(1.0)

    def test_objective_is_the_reconstruction_loss(self, rng):
        Kt = lle_weights(rng.standard_normal((30, 3)), 5)
        result = lle_embed(Kt, 2)
        assert lle_objective(Kt, result.Z) == pytest.approx(result.objective, rel=1e-8)

    def test_beats_pca_on_random_data(self, rng):
        X = rng.standard_normal((50, 4))
        Kt = lle_weights(X, 6)
        lle = lle_embed(Kt, 2)
        pca = pca_embed(X, 2)
        assert lle_objective(Kt, lle.Z) <= lle_objective(Kt, pca.Z) + 1e-12

    def test_beats_pca_on_a_swiss_roll(self):
        points, _ = make_swiss_roll(n_samples=400, noise=0.05, random_state=7)
        X = points[:, [0, 2]]
        Kt = lle_weights(X, 10)
        lle = lle_embed(Kt, 2)
        assert lle.objective <= lle_objective(Kt, pca_embed(X, 2).Z) + 1e-12

    def test_rank_out_of_range(self):
        with pytest.raises(InvalidParameter):
            lle_embed(np.eye(4), 3)

    def test_not_square(self):
        with pytest.raises(NotSquare):
            lle_embed(np.ones((3, 4)) / 4, 1)


class TestAmdsFactorize:
    def test_exact_low_rank(self, rng):
        K = rng.standard_normal((5, 2)) @ rng.standard_normal((2, 4))
        f = amds_factorize(K, 2)
        assert f.strain < 1e-18 * (K**2).sum() + 1e-24

    def test_full_rank(self, rng):
        K = rng.standard_normal((4, 4))
        assert amds_factorize(K, 4).strain < 1e-18 * (K**2).sum()

    def test_nmf_strain_never_grows(self, rng):
        K = rng.uniform(0.1, 1.0, (4, 4))
        f = amds_factorize(K, 2, method="nmf", iters=200, seed=3)
        assert len(f.trace) == 201
        assert np.all(np.diff(f.trace) <= 1e-12 * f.trace[0])
        assert np.all(f.phi >= 0) and np.all(f.psi >= 0)

    def test_svd_is_optimal(self, rng):
        K = rng.uniform(0.0, 1.0, (6, 5))
        svd = amds_factorize(K, 2)
        nmf = amds_factorize(K, 2, method="nmf", seed=1)
        assert svd.strain <= nmf.strain + 1e-12

    def test_kernel_matrix_input(self, rng):
        K = gram(gaussian(), rng.standard_normal((8, 2)))
        f = amds_factorize(K, 3)
        assert f.phi.shape == (8, 3)
        assert np.isfinite(f.strain)

    def test_negative_input(self):
        with pytest.raises(NegativeInputForNMF):
            amds_factorize([[1.0, -1.0], [0.5, 0.2]], 1, method="nmf")

    def test_unknown_method(self):
        with pytest.raises(InvalidParameter):
            amds_factorize(np.eye(3), 1, method="ica")


class TestCooccurrenceEmbed:
    def test_counts(self):
        vocabulary, C = cooccurrence_counts([["a", "b", "a"]])
        assert vocabulary == ["a", "b"]
        assert_array_equal(C, [[2.0, 2.0], [2.0, 0.0]])

    def test_related_words_align(self):
        vectors = cooccurrence_embed([["a", "b", "a"]], 1)
        assert vectors.similarity("a", "b") > 0

    def test_disjoint_vocabularies(self):
        windows = [["a", "b", "a"]] + [["c", "d"]] * 5
        vectors = cooccurrence_embed(windows, 3)
        for left in ("a", "b"):
            for right in ("c", "d"):
                assert abs(vectors.similarity(left, right)) < 1e-12
                assert abs(vectors.similarity(right, left)) < 1e-12

    def test_repeated_windows_keep_the_direction(self):
        once = cooccurrence_embed([["a", "b", "a"]], 1).inputs[:, 0]
        many = cooccurrence_embed([["a", "b", "a"]] * 10, 1).inputs[:, 0]
        assert_allclose(
            once / np.linalg.norm(once), many / np.linalg.norm(many), atol=1e-8
        )

    def test_empty_corpus(self):
        with pytest.raises(EmptyCorpus):
            cooccurrence_embed([[]], 1)

    def test_dimension_below_vocabulary(self):
        with pytest.raises(InvalidParameter):
            cooccurrence_embed([["a", "b"]], 2)


class TestReadCorpus:
    def test_sliding_windows(self, tmp_path):
        path = tmp_path / "corpus.txt"
        path.write_text("The cat  sat\nthe DOG\n", encoding="utf-8")
        windows = read_corpus(str(path), 2)
        expected = [["the", "cat"], ["cat", "sat"], ["sat", "the"], ["the", "dog"]]
        assert windows == expected

    def test_short_text_is_one_window(self, tmp_path):
        path = tmp_path / "corpus.txt"
        path.write_text("one two", encoding="utf-8")
        assert read_corpus(str(path), 5) == [["one", "two"]]

    def test_blank_file(self, tmp_path):
        path = tmp_path / "corpus.txt"
        path.write_text("  \n", encoding="utf-8")
        with pytest.raises(EmptyCorpus):
            read_corpus(str(path), 3)


class TestTrimap:
    def test_three_points_against_the_triple_loop(self, rng):
        X = rng.standard_normal((3, 2))
        S = similarity_matrix(X, gaussian(1.0))
        triplets = sample_triplets(S, seed=0)
        assert len(triplets) == 6
        weights = contrast(S, triplets)
        Z = rng.standard_normal((3, 2))
        expected = 0.0
        for i in range(3):
            for j in range(3):
                for l in range(3):
                    if len({i, j, l}) < 3:
                        continue
                    c = S[i, j] / (S[i, j] + S[i, l])
                    d12 = ((Z[i] - Z[j]) ** 2).sum()
                    d13 = ((Z[i] - Z[l]) ** 2).sum()
                    expected += c * (d12 - d13)
        value, _ = trimap_objective(Z, triplets, weights)
        assert value == pytest.approx(expected, abs=1e-12)

    def test_identity_objective_is_mds_over_the_marginal_kernel(self, rng):
        X = rng.standard_normal((6, 2))
        S = similarity_matrix(X, gaussian(1.0))
        M = np.zeros((6, 6))
        for i in range(6):
            for j in range(6):
                for l in range(6):
                    if len({i, j, l}) < 3:
                        continue
                    c = S[i, j] / (S[i, j] + S[i, l])
                    M[i, j] += c
                    M[i, l] -= c
        Z = rng.standard_normal((6, 3))
        D2 = ((Z[:, None] - Z[None, :]) ** 2).sum(axis=2)
        triplets = sample_triplets(S, seed=0)
        assert len(triplets) == 120
        value, _ = trimap_objective(Z, triplets, contrast(S, triplets))
        assert value == pytest.approx((M * D2).sum(), rel=1e-12)

    def test_identical_points(self):
        X = np.zeros((4, 2))
        S = similarity_matrix(X)
        triplets = sample_triplets(S, seed=0)
        weights = contrast(S, triplets)
        assert_allclose(weights, 0.5)
        _, grad = trimap_objective(np.zeros((4, 2)), triplets, weights)
        assert_array_equal(grad, 0.0)

    def test_gradient_matches_finite_differences(self, rng):
        X = rng.standard_normal((5, 2))
        S = similarity_matrix(X)
        triplets = sample_triplets(S, seed=0)
        weights = contrast(S, triplets)
        Z = rng.standard_normal((5, 2))
        _, grad = trimap_objective(Z, triplets, weights, h="log1p")
        E = np.zeros_like(Z)
        E[2, 1] = 1e-6
        up, _ = trimap_objective(Z + E, triplets, weights, h="log1p")
        down, _ = trimap_objective(Z - E, triplets, weights, h="log1p")
        assert (up - down) / 2e-6 == pytest.approx(grad[2, 1], rel=1e-5)

    def test_two_tight_clusters_separate(self, rng):
        X = np.vstack([rng.normal(0.0, 0.1, (8, 3)), rng.normal(5.0, 0.1, (8, 3))])
        result = trimap_embed(X, q=2, steps=300, lr=5.0, seed=3)
        D = np.linalg.norm(result.Z[:, None] - result.Z[None, :], axis=2)
        same = np.equal.outer(np.arange(16) < 8, np.arange(16) < 8)
        off = ~np.eye(16, dtype=bool)
        assert D[same & off].mean() < D[~same].mean()
        assert np.isfinite(result.objective)

    def test_seeded_runs_repeat(self, rng):
        X = rng.standard_normal((10, 3))
        a = trimap_embed(X, steps=20, seed=5, h="log1p")
        b = trimap_embed(X, steps=20, seed=5, h="log1p")
        assert_array_equal(a.Z, b.Z)

    def test_sampled_triplets_are_distinct(self, rng):
        S = similarity_matrix(rng.standard_normal((20, 2)))
        triplets = sample_triplets(S, seed=1, budget=100)
        assert len(triplets) > 0
        assert np.all(triplets[:, 0] != triplets[:, 1])
        assert np.all(triplets[:, 0] != triplets[:, 2])
        assert np.all(triplets[:, 1] != triplets[:, 2])

    def test_unknown_increasing_function(self, rng):
        with pytest.raises(InvalidParameter):
            trimap_embed(rng.standard_normal((5, 2)), h="cube")
