import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from helpers import gaussian_blobs
from covelm.elm import (
    CLASSES,
    Standardizer,
    hidden_output,
    init_hidden,
    labels_from_scores,
    one_hot,
    predict,
    train,
)
from covelm.errors import InvalidInput


class TestInitHidden:
    def test_deterministic(self):
        a1, b1 = init_hidden(20, 30, "rbf_l2", 7)
        a2, b2 = init_hidden(20, 30, "rbf_l2", 7)
        assert a1.tobytes() == a2.tobytes() and b1.tobytes() == b2.tobytes()

    def test_default_shape(self):
        A, b = init_hidden(168, 350, "rbf_l2", 0)
        assert A.shape == (350, 168) and b.shape == (350,)

    def test_seeds_differ(self):
        assert np.any(init_hidden(5, 5, "rbf_l2", 1)[0] != init_hidden(5, 5, "rbf_l2", 2)[0])

    def test_ranges(self):
        A, b = init_hidden(50, 500, "rbf_l2", 3)
        assert A.min() >= -1 and A.max() <= 1
        assert b.min() > 0 and b.max() <= 1 / 50
        A, b = init_hidden(50, 500, "sigmoid", 3)
        assert b.min() >= -1 and b.max() <= 1 and b.min() < 0

    @pytest.mark.parametrize("n,L", [(0, 5), (5, 0), (-1, 3)])
    def test_bad_sizes(self, n, L):
        with pytest.raises(InvalidInput):
            init_hidden(n, L)

    def test_bad_activation(self):
        with pytest.raises(InvalidInput):
            init_hidden(3, 3, "relu")


class TestHiddenOutput:
    def test_centre_gives_one(self):
        A, b = init_hidden(4, 6, "rbf_l2", 0)
        G = hidden_output(A[2:3], A, b)
        assert G[0, 2] == 1.0

    def test_rbf_range(self, rng):
        A, b = init_hidden(10, 40, "rbf_l2", 1)
        G = hidden_output(rng.normal(size=(25, 10)) * 3, A, b)
        assert np.all(G > 0) and np.all(G <= 1)

    def test_rbf_matches_loop(self, rng):
        X = rng.normal(size=(7, 5))
        A, b = init_hidden(5, 9, "rbf_l2", 4)
        ref = np.array(oracles.rbf_loop(X.tolist(), A.tolist(), b.tolist()))
        np.testing.assert_allclose(hidden_output(X, A, b, "rbf_l2"), ref, rtol=0, atol=1e-12)

    def test_sigmoid_matches_loop(self, rng):
        X = rng.normal(size=(7, 5))
        A, b = init_hidden(5, 9, "sigmoid", 4)
        ref = np.array(oracles.sigmoid_loop(X.tolist(), A.tolist(), b.tolist()))
        np.testing.assert_allclose(hidden_output(X, A, b, "sigmoid"), ref, rtol=0, atol=1e-12)

    def test_shape_mismatch(self, rng):
        A, b = init_hidden(5, 9)
        with pytest.raises(InvalidInput):
            hidden_output(rng.normal(size=(3, 4)), A, b)


class TestStandardizer:
    def test_zero_variance_gets_unit_scale(self):
        X = np.array([[1.0, 5.0], [3.0, 5.0]])
        s = Standardizer.fit(X)
        np.testing.assert_array_equal(s.scale, [1.0, 1.0])
        np.testing.assert_array_equal(s.transform(X), [[-1.0, 0.0], [1.0, 0.0]])

    def test_moments(self, rng):
        X = rng.normal(3, 7, size=(80, 6))
        Z = Standardizer.fit(X).transform(X)
        assert np.max(np.abs(Z.mean(axis=0))) <= 1e-9
        np.testing.assert_allclose(Z.std(axis=0), 1.0, rtol=1e-12)


class TestTrain:
    def test_separable_blobs(self, rng):
        X = np.r_[rng.normal(0, 0.1, (50, 2)), rng.normal(0, 0.1, (50, 2)) + [5.0, 0.0]]
        y = ["a"] * 50 + ["b"] * 50
        model = train(X, y, L=20, seed=0)
        _, pred = predict(model, X)
        assert pred == y

    def test_xor(self):
        X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
        y = ["A", "B", "B", "A"]
        model = train(X, y, L=10, activation="rbf_l2", seed=0)
        assert predict(model, X)[1] == y

    def test_deterministic(self, rng):
        X, y = gaussian_blobs(20, 12, 3, seed=2)
        m1 = train(X, y, L=40, seed=5)
        m2 = train(X, y, L=40, seed=5)
        assert m1.beta.tobytes() == m2.beta.tobytes()

    def test_default_class_order(self):
        X, y = gaussian_blobs(10, 4, 2, seed=0)
        assert train(X, y, L=5).class_order == CLASSES

    def test_missing_class(self):
        X = np.random.default_rng(0).normal(size=(6, 3))
        with pytest.raises(InvalidInput, match="absent"):
            train(X, ["covid"] * 3 + ["normal"] * 3, L=4)

    def test_label_count_mismatch(self):
        with pytest.raises(InvalidInput):
            train(np.zeros((3, 2)), ["a", "b"], L=2)

    @pytest.mark.parametrize("activation", ["rbf_l2", "sigmoid"])
    def test_optimality(self, activation):
        X, y = gaussian_blobs(40, 30, 5, seed=3)
        model = train(X, y, L=60, activation=activation, seed=1)
        G = hidden_output(model.standardizer.transform(X), model.A, model.b, activation)
        T = one_hot(y, model.class_order)
        assert np.max(np.abs(G.T @ (G @ model.beta - T))) <= 1e-6

    def test_permutation_equivariance(self, rng):
        X, y = gaussian_blobs(30, 20, 4, seed=4)
        perm = rng.permutation(len(y))
        m1 = train(X, y, L=50, seed=9)
        m2 = train(X[perm], [y[i] for i in perm], L=50, seed=9)
        np.testing.assert_allclose(m2.beta, m1.beta, atol=1e-9)

    def test_integer_labels(self):
        X, _ = gaussian_blobs(15, 6, 3, seed=1)
        y = np.repeat([2, 0, 1], 15)
        model = train(X, y, L=30)
        assert model.class_order == (0, 1, 2)
        assert all(isinstance(c, int) for c in model.class_order)


class TestPredict:
    def test_argmax(self):
        assert labels_from_scores([[0.2, 0.9, 0.1]], CLASSES) == ["normal"]

    def test_tie_goes_to_lowest_index(self):
        assert labels_from_scores([[0.5, 0.5, 0.0]], CLASSES) == ["covid"]
        assert labels_from_scores([[0.1, 0.5, 0.5]], CLASSES) == ["normal"]

    def test_feature_count_mismatch(self):
        X, y = gaussian_blobs(10, 6, 3, seed=0)
        model = train(X, y, L=8)
        with pytest.raises(InvalidInput):
            predict(model, np.zeros((2, 5)))

    def test_single_row(self):
        X, y = gaussian_blobs(10, 6, 3, seed=0)
        scores, labels = predict(train(X, y, L=8), X[0])
        assert scores.shape == (1, 3) and len(labels) == 1

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=3, max_size=3), st.floats(0.1, 10),
           st.floats(-3, 3))
    def test_argmax_invariant_under_monotone_map(self, row, scale, shift):
        s = np.array([row])
        a = labels_from_scores(s, CLASSES)
        b = labels_from_scores(np.exp(scale * s + shift), CLASSES)
        c = labels_from_scores(s**3, CLASSES)
        # ties may be created or broken by rounding in the transformed row
        if len(set(row)) == 3 and min(np.diff(sorted(row))) > 1e-6:
            assert a == b == c
