"""Model container: exact round-trips, deterministic bytes, format checks."""

from __future__ import annotations

import zipfile

import numpy as np
import pytest
from scipy import sparse

from uttlabel.chain import fit_chain, predict_chain
from uttlabel.learners import (
    load_model,
    predict,
    save_model,
    train_adaboost_nb,
    train_logreg,
    train_naive_bayes,
    train_random_forest,
    train_sgd_svm,
)
from uttlabel.metrics import LabelMatrix


def _problem(seed=0, n=20, d=4):
    rng = np.random.default_rng(seed)
    X = sparse.csr_matrix(rng.random((n, d)))
    y = [("A", "B")[i] for i in rng.integers(0, 2, n)]
    if len(set(y)) < 2:
        y[0] = "A" if y[0] != "A" else "B"
    return X, y


def _all_models():
    X, y = _problem()
    return X, {
        "nb": train_naive_bayes(X, y, alpha=1.0),
        "adaboost_nb": train_adaboost_nb(X, y, n_estimators=5),
        "rf": train_random_forest(X, y, n_trees=3, seed=7),
        "gd_svm": train_sgd_svm(X, y, epochs=5, lam=1e-4, seed=7),
        "logreg": train_logreg(X, y, lam=1e-4, max_iter=20),
    }


class TestRoundTrip:
    def test_every_kind_round_trips_exactly(self, tmp_path):
        X, models = _all_models()
        for name, model in models.items():
            path = tmp_path / f"{name}.zip"
            save_model(model, path)
            again = load_model(path)
            assert type(again) is type(model)
            p0, s0 = predict(model, X)
            p1, s1 = predict(again, X)
            assert p0 == p1
            assert np.array_equal(s0, s1)

    def test_chain_round_trips(self, tmp_path):
        rng = np.random.default_rng(3)
        X = sparse.csr_matrix(rng.random((15, 4)))
        sets = [
            frozenset(l for l in ("x", "y") if rng.random() < 0.5) for _ in range(15)
        ]
        Y = LabelMatrix.from_label_sets(sets, ("x", "y"))
        chain = fit_chain({"model": "rf", "n_trees": 3}, X, Y, seed=2)
        path = tmp_path / "chain.zip"
        save_model(chain, path)
        again = load_model(path)
        assert np.array_equal(predict_chain(chain, X).rows, predict_chain(again, X).rows)
        assert again.order == chain.order
        assert again.base_spec == chain.base_spec

    def test_float_state_is_bit_exact(self, tmp_path):
        X, models = _all_models()
        model = models["logreg"]
        save_model(model, tmp_path / "m.zip")
        again = load_model(tmp_path / "m.zip")
        assert np.array_equal(model.weights, again.weights)
        assert np.array_equal(model.bias, again.bias)
        assert again.converged == model.converged
        assert again.n_iter == model.n_iter


class TestContainerFormat:
    def test_bytes_are_deterministic(self, tmp_path):
        X, y = _problem()
        a_path, b_path = tmp_path / "a.zip", tmp_path / "b.zip"
        save_model(train_naive_bayes(X, y, alpha=1.0), a_path)
        save_model(train_naive_bayes(X, y, alpha=1.0), b_path)
        assert a_path.read_bytes() == b_path.read_bytes()

    def test_is_a_zipfile_with_manifest(self, tmp_path):
        X, y = _problem()
        path = tmp_path / "m.zip"
        save_model(train_naive_bayes(X, y, alpha=1.0), path)
        with zipfile.ZipFile(path) as zf:
            names = zf.namelist()
            assert "manifest.json" in names
            for info in zf.infolist():
                assert info.date_time == (1980, 1, 1, 0, 0, 0)

    def test_unknown_kind_rejected(self, tmp_path):
        X, y = _problem()
        path = tmp_path / "m.zip"
        save_model(train_naive_bayes(X, y, alpha=1.0), path)
        import json

        with zipfile.ZipFile(path) as zf:
            manifest = json.loads(zf.read("manifest.json"))
            arrays = {
                n: zf.read(n) for n in zf.namelist() if n != "manifest.json"
            }
        manifest["kind"] = "mystery"
        bad = tmp_path / "bad.zip"
        with zipfile.ZipFile(bad, "w") as zf:
            zf.writestr("manifest.json", json.dumps(manifest))
            for n, data in arrays.items():
                zf.writestr(n, data)
        with pytest.raises(ValueError, match="mystery"):
            load_model(bad)

    def test_not_a_container_rejected(self, tmp_path):
        path = tmp_path / "nope.zip"
        path.write_bytes(b"not a zip at all")
        with pytest.raises(ValueError):
            load_model(path)
