"""Classifier chains: reduction identity, ordering, teacher forcing."""

from __future__ import annotations

import numpy as np
import pytest
from scipy import sparse

from uttlabel.chain import (
    BASE_LEARNERS,
    ChainModel,
    default_chain_order,
    fit_chain,
    predict_chain,
)
from uttlabel.learners import predict, train_learner
from uttlabel.metrics import LabelMatrix
from uttlabel.seeding import stable_seed


def _csr(rows):
    return sparse.csr_matrix(np.asarray(rows, dtype=np.float64))


def _random_problem(seed, n=24, d=6, labels=("p", "q", "r")):
    rng = np.random.default_rng(seed)
    X = rng.random((n, d)) * (rng.random((n, d)) < 0.5)
    sets = []
    for i in range(n):
        chosen = frozenset(
            lab for j, lab in enumerate(labels) if rng.random() < 0.4
        )
        sets.append(chosen)
    Y = LabelMatrix.from_label_sets(sets, labels)
    return _csr(X), Y


class TestDefaultOrder:
    def test_descending_frequency(self):
        sets = [frozenset({"a", "b"}), frozenset({"b"}), frozenset({"c", "b"})]
        Y = LabelMatrix.from_label_sets(sets, ("a", "b", "c"))
        assert default_chain_order(Y) == ("b", "a", "c")

    def test_frequency_ties_break_lexicographically(self):
        sets = [frozenset({"z", "a"})]
        Y = LabelMatrix.from_label_sets(sets, ("a", "z"))
        assert default_chain_order(Y) == ("a", "z")


class TestReductionIdentity:
    @pytest.mark.parametrize("model_id", BASE_LEARNERS)
    def test_single_label_chain_equals_base_learner(self, model_id):
        for trial in range(20):
            rng = np.random.default_rng(trial)
            n, d = 16, 5
            X = _csr(rng.random((n, d)))
            y01 = [int(v) for v in rng.integers(0, 2, n)]
            if len(set(y01)) < 2:
                y01[0] = 1 - y01[0]
            Y = LabelMatrix.from_label_sets(
                [frozenset({"only"}) if v else frozenset() for v in y01], ("only",)
            )
            seed = 1000 + trial
            spec = {"model": model_id, "epochs": 5, "n_trees": 3, "n_estimators": 5}
            chain = fit_chain(spec, X, Y, seed=seed)
            chain_pred = predict_chain(chain, X).rows[:, 0]

            link_seed = stable_seed(seed, "link:0")
            base = train_learner(spec, X, y01, (0, 1), link_seed)
            base_pred = np.asarray(predict(base, X)[0])
            assert np.array_equal(chain_pred, base_pred)


class TestTeacherForcing:
    def test_links_consume_growing_feature_space(self):
        X, Y = _random_problem(0)
        chain = fit_chain({"model": "nb"}, X, Y, seed=3)
        dims = [link.dimension for link in chain.links]
        assert dims == [6, 7, 8]

    def test_training_uses_true_labels(self):
        # the second link sees the TRUE first-label column during training;
        # a perfectly correlated pair is learnable through that column alone
        rng = np.random.default_rng(7)
        n = 40
        X = rng.random((n, 2)) * 0.1  # features carry almost no signal
        first = rng.integers(0, 2, n)
        sets = [
            frozenset({"lead", "echo"}) if f else frozenset() for f in first
        ]
        Y = LabelMatrix.from_label_sets(sets, ("echo", "lead"))
        chain = fit_chain({"model": "logreg"}, _csr(X), Y, order=("lead", "echo"), seed=0)
        echo_link = chain.links[1]
        # the augmented indicator column dominates the echo link's weights
        w = echo_link.weights.ravel()
        assert abs(w[-1]) > 5 * max(abs(w[0]), abs(w[1]), 1e-9)

    def test_prediction_feeds_predicted_columns(self):
        X, Y = _random_problem(1)
        chain = fit_chain({"model": "nb"}, X, Y, seed=5)
        M = predict_chain(chain, X)
        assert M.shape == Y.shape
        assert M.label_universe == Y.label_universe

    def test_all_zero_rows_kept(self):
        # constant-negative training data predicts the empty label set
        X = _csr(np.random.default_rng(2).random((10, 3)))
        Y = LabelMatrix.from_label_sets([frozenset()] * 10, ("a", "b"))
        chain = fit_chain({"model": "nb"}, X, Y, seed=1)
        M = predict_chain(chain, X)
        assert M.rows.sum() == 0
        assert M.rows.shape == (10, 2)

    def test_empty_input_gives_empty_matrix(self):
        X, Y = _random_problem(3)
        chain = fit_chain({"model": "nb"}, X, Y, seed=2)
        M = predict_chain(chain, _csr(np.zeros((0, 6))))
        assert M.rows.shape == (0, 3)


class TestValidation:
    def test_order_must_be_permutation(self):
        X, Y = _random_problem(4)
        with pytest.raises(ValueError, match="permutation"):
            fit_chain({"model": "nb"}, X, Y, order=("p", "q"), seed=0)

    def test_row_mismatch_rejected(self):
        X, Y = _random_problem(5)
        with pytest.raises(ValueError):
            fit_chain({"model": "nb"}, X[:3], Y, seed=0)

    def test_dimension_mismatch_at_predict(self):
        X, Y = _random_problem(6)
        chain = fit_chain({"model": "nb"}, X, Y, seed=0)
        with pytest.raises(ValueError, match="dimension"):
            predict_chain(chain, _csr(np.zeros((2, 9))))

    def test_unknown_base_learner(self):
        X, Y = _random_problem(7)
        with pytest.raises(ValueError, match="unknown base learner"):
            fit_chain({"model": "mystery"}, X, Y, seed=0)


class TestDeterminism:
    def test_same_seed_same_predictions(self):
        X, Y = _random_problem(8)
        a = fit_chain({"model": "rf", "n_trees": 4}, X, Y, seed=13)
        b = fit_chain({"model": "rf", "n_trees": 4}, X, Y, seed=13)
        assert np.array_equal(predict_chain(a, X).rows, predict_chain(b, X).rows)

    def test_links_get_distinct_seeds(self):
        assert stable_seed(5, "link:0") != stable_seed(5, "link:1")
