"""GD-SVM and logistic regression: schedule math, gradients, convergence."""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import sparse

import oracles
from uttlabel.learners import (
    KIND_HINGE,
    KIND_LOGISTIC,
    predict,
    train_logreg,
    train_sgd_svm,
)
from uttlabel.learners.linear import logreg_objective_grad, sgd_t0


def _csr(rows):
    return sparse.csr_matrix(np.asarray(rows, dtype=np.float64))


def _blobs(n_per, d, gap, seed):
    rng = np.random.default_rng(seed)
    a = rng.random((n_per, d)) * 0.5
    b = rng.random((n_per, d)) * 0.5
    a[:, 0] += gap
    X = np.vstack([a, b])
    y = ["A"] * n_per + ["B"] * n_per
    return _csr(X), y


class TestSchedule:
    def test_t0_closed_form(self):
        # eta0 = sqrt(1/sqrt(lam)); t0 = 1/(lam*eta0)
        assert sgd_t0(1e-4) == pytest.approx(1000.0, rel=1e-12)
        lam = 0.01
        eta0 = math.sqrt(1.0 / math.sqrt(lam))
        assert sgd_t0(lam) == pytest.approx(1.0 / (lam * eta0), rel=1e-12)

    def test_first_step_rate_is_eta0_scale(self):
        # at t = 0 the rate is 1/(lam*t0) = eta0
        lam = 1e-4
        assert 1.0 / (lam * sgd_t0(lam)) == pytest.approx(10.0, rel=1e-12)


class TestSgdSvm:
    def test_separable_data_learned(self):
        X, y = _blobs(30, 4, 2.0, 0)
        model = train_sgd_svm(X, y, epochs=50, lam=1e-4, seed=1)
        assert predict(model, X)[0] == y

    def test_binary_uses_single_weight_vector(self):
        X, y = _blobs(5, 3, 2.0, 2)
        model = train_sgd_svm(X, y, epochs=5, lam=1e-4, seed=0)
        assert model.model_kind == KIND_HINGE
        assert model.weights.shape == (1, 3)
        # scores are (-s, +s) so rows sum to zero
        _, scores = predict(model, X)
        assert np.allclose(scores.sum(axis=1), 0.0, atol=1e-12)

    def test_multiclass_one_vs_rest(self):
        rng = np.random.default_rng(3)
        X = rng.random((30, 4)) * 0.3
        X[:10, 0] += 2
        X[10:20, 1] += 2
        X[20:, 2] += 2
        y = ["A"] * 10 + ["B"] * 10 + ["C"] * 10
        model = train_sgd_svm(_csr(X), y, epochs=60, lam=1e-4, seed=5)
        assert model.weights.shape == (3, 4)
        assert predict(model, _csr(X))[0] == y

    def test_determinism_same_seed(self):
        X, y = _blobs(20, 5, 1.0, 4)
        a = train_sgd_svm(X, y, epochs=10, lam=1e-4, seed=9)
        b = train_sgd_svm(X, y, epochs=10, lam=1e-4, seed=9)
        assert np.array_equal(a.weights, b.weights)
        assert np.array_equal(a.bias, b.bias)

    def test_different_seeds_differ(self):
        X, y = _blobs(20, 5, 0.3, 5)
        a = train_sgd_svm(X, y, epochs=3, lam=1e-4, seed=1)
        b = train_sgd_svm(X, y, epochs=3, lam=1e-4, seed=2)
        assert not np.allclose(a.weights, b.weights)

    def test_weight_norm_bounded_by_regularization(self):
        # pegasos-style analysis bounds ||w|| by 1/sqrt(lam)
        X, y = _blobs(25, 4, 1.5, 6)
        lam = 1e-2
        model = train_sgd_svm(X, y, epochs=200, lam=lam, seed=0)
        assert np.linalg.norm(model.weights) <= 1.0 / math.sqrt(lam) + 1e-6


class TestLogregGradient:
    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(0)
        failures = 0
        for trial in range(50):
            n = int(rng.integers(4, 12))
            d = int(rng.integers(2, 5))
            k = int(rng.integers(2, 4))
            X = sparse.csr_matrix(rng.standard_normal((n, d)))
            y_idx = rng.integers(0, k, n)
            y_onehot = np.zeros((n, k))
            y_onehot[np.arange(n), y_idx] = 1.0
            W = rng.standard_normal((k, d)) * 0.5
            b = rng.standard_normal(k) * 0.5
            lam = float(rng.choice([0.0, 1e-4, 1e-2]))
            _, grad_w, grad_b = logreg_objective_grad(X, y_onehot, W, b, lam)

            h = 1e-5
            num_w = np.zeros_like(W)
            for c in range(k):
                for j in range(d):
                    Wp, Wm = W.copy(), W.copy()
                    Wp[c, j] += h
                    Wm[c, j] -= h
                    op, _, _ = logreg_objective_grad(X, y_onehot, Wp, b, lam)
                    om, _, _ = logreg_objective_grad(X, y_onehot, Wm, b, lam)
                    num_w[c, j] = (op - om) / (2 * h)
            num_b = np.zeros_like(b)
            for c in range(k):
                bp, bm = b.copy(), b.copy()
                bp[c] += h
                bm[c] -= h
                op, _, _ = logreg_objective_grad(X, y_onehot, W, bp, lam)
                om, _, _ = logreg_objective_grad(X, y_onehot, W, bm, lam)
                num_b[c] = (op - om) / (2 * h)

            rel_w = np.abs(grad_w - num_w) / (np.abs(num_w) + np.abs(grad_w) + 1e-8)
            rel_b = np.abs(grad_b - num_b) / (np.abs(num_b) + np.abs(grad_b) + 1e-8)
            if rel_w.max() > 1e-5 or rel_b.max() > 1e-5:
                failures += 1
        assert failures == 0

    def test_objective_matches_loop_reference(self):
        rng = np.random.default_rng(1)
        X_dense = rng.standard_normal((8, 3))
        y_idx = rng.integers(0, 2, 8)
        y_onehot = np.zeros((8, 2))
        y_onehot[np.arange(8), y_idx] = 1.0
        W = rng.standard_normal((2, 3))
        b = rng.standard_normal(2)
        obj, _, _ = logreg_objective_grad(sparse.csr_matrix(X_dense), y_onehot, W, b, 0.01)
        want = oracles.logistic_objective(
            W.tolist(), b.tolist(), X_dense.tolist(), list(y_idx), 0.01
        )
        assert obj == pytest.approx(want, rel=1e-12)


class TestLogregTraining:
    def test_converges_on_separable_data(self):
        X, y = _blobs(25, 4, 2.0, 7)
        model = train_logreg(X, y, lam=1e-4, max_iter=100, tol=1e-4)
        assert model.model_kind == KIND_LOGISTIC
        assert predict(model, X)[0] == y

    def test_converged_flag_reflects_gradient_norm(self):
        X, y = _blobs(20, 3, 1.5, 8)
        # strong regularization gives a well-conditioned problem that plain
        # gradient descent polishes to the tolerance quickly
        done = train_logreg(X, y, lam=1.0, max_iter=500, tol=1e-4)
        assert done.converged
        assert done.n_iter <= 500
        capped = train_logreg(X, y, lam=1.0, max_iter=1, tol=1e-12)
        assert not capped.converged
        assert capped.n_iter == 1

    def test_objective_monotone_under_line_search(self):
        rng = np.random.default_rng(9)
        X = sparse.csr_matrix(rng.standard_normal((30, 5)))
        y = [("A", "B", "C")[i] for i in rng.integers(0, 3, 30)]
        trace: list[float] = []
        model = train_logreg(X, y, lam=1e-3, max_iter=40, tol=0.0, objective_log=trace)
        assert len(trace) >= 2
        assert all(b <= a + 1e-12 for a, b in zip(trace, trace[1:]))

    def test_deterministic(self):
        X, y = _blobs(15, 4, 1.0, 10)
        a = train_logreg(X, y, lam=1e-4)
        b = train_logreg(X, y, lam=1e-4)
        assert np.array_equal(a.weights, b.weights)
        assert np.array_equal(a.bias, b.bias)

    def test_bias_unregularized(self):
        # with a hugely imbalanced constant dataset the bias must be able to
        # grow despite a large lam, which would be impossible if penalized
        X = _csr(np.zeros((10, 2)))
        y = ["A"] * 9 + ["B"]
        model = train_logreg(X, y, lam=10.0, max_iter=200, tol=1e-10)
        probs_gap = model.bias[model.classes.index("A")] - model.bias[
            model.classes.index("B")
        ]
        assert probs_gap > 0.5
        assert np.allclose(model.weights, 0.0, atol=1e-8)
