"""Kernel backend parity: the compiled and pure-Python kernels must agree.

Tree construction is bit-identical by contract (integer statistics, shared
RNG, same scan order).  SGD agrees to float tolerance: the two backends
accumulate dot products in different orders, so weights match to ~1e-12
while predictions on small problems match exactly.
"""

from __future__ import annotations

import numpy as np
import pytest
from scipy import sparse

from uttlabel import _kernels
from uttlabel._kernels import available_backends, backend_name, use_backend
from uttlabel.learners import predict, train_random_forest, train_sgd_svm
from uttlabel.seeding import SplitMix64, stable_seed

BOTH = available_backends()
HAVE_COMPILED = BOTH.get("compiled", False)

needs_compiled = pytest.mark.skipif(
    not HAVE_COMPILED, reason="compiled kernel not built"
)


def _problem(seed, n=40, d=8):
    rng = np.random.default_rng(seed)
    dense = rng.random((n, d)) * (rng.random((n, d)) < 0.6)
    y = [("A", "B", "C")[i] for i in rng.integers(0, 3, n)]
    if len(set(y)) < 2:
        y[0] = "A" if y[0] != "A" else "B"
    return sparse.csr_matrix(dense), y


class TestSelection:
    def test_python_backend_always_available(self):
        assert BOTH["python"]

    def test_use_backend_switches_and_restores(self):
        original = backend_name()
        with use_backend("python"):
            assert backend_name() == "python"
        assert backend_name() == original

    def test_unknown_backend_rejected(self):
        with pytest.raises(ValueError):
            with use_backend("fortran"):
                pass

    @needs_compiled
    def test_compiled_backend_selectable(self):
        with use_backend("compiled"):
            assert backend_name() == "compiled"


class TestSplitMix:
    def test_sequence_is_stable(self):
        rng = SplitMix64(0)
        first = [rng.next_u64() for _ in range(3)]
        # reference values of the standard splitmix64 stream from seed 0
        assert first == [
            16294208416658607535,
            7960286522194355700,
            487617019471545679,
        ]

    def test_seed_derivation_is_stable(self):
        assert stable_seed(0, "split:EMO-COG") == stable_seed(0, "split:EMO-COG")
        assert stable_seed(0, "a") != stable_seed(0, "b")
        assert stable_seed(0, "a") != stable_seed(1, "a")


@needs_compiled
class TestForestParity:
    @pytest.mark.parametrize("seed", [0, 1, 2, 3, 7])
    def test_trees_bit_identical(self, seed):
        X, y = _problem(seed)
        with use_backend("python"):
            fp = train_random_forest(X, y, n_trees=4, seed=seed)
        with use_backend("compiled"):
            fc = train_random_forest(X, y, n_trees=4, seed=seed)
        for tp, tc in zip(fp.trees, fc.trees):
            assert np.array_equal(tp.feature, tc.feature)
            assert np.array_equal(tp.threshold, tc.threshold)
            assert np.array_equal(tp.left, tc.left)
            assert np.array_equal(tp.right, tc.right)
            assert np.array_equal(tp.counts, tc.counts)

    def test_predictions_identical(self):
        X, y = _problem(11)
        with use_backend("python"):
            fp = train_random_forest(X, y, n_trees=6, seed=5)
        with use_backend("compiled"):
            fc = train_random_forest(X, y, n_trees=6, seed=5)
        assert predict(fp, X)[0] == predict(fc, X)[0]


@needs_compiled
class TestSgdParity:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_weights_close_and_predictions_equal(self, seed):
        X, y = _problem(seed, n=30, d=5)
        with use_backend("python"):
            mp = train_sgd_svm(X, y, epochs=20, lam=1e-4, seed=seed)
        with use_backend("compiled"):
            mc = train_sgd_svm(X, y, epochs=20, lam=1e-4, seed=seed)
        assert np.allclose(mp.weights, mc.weights, rtol=1e-9, atol=1e-12)
        assert np.allclose(mp.bias, mc.bias, rtol=1e-9, atol=1e-12)
        assert predict(mp, X)[0] == predict(mc, X)[0]


class TestEnvironmentOverride:
    def test_env_var_respected_in_subprocess(self):
        import subprocess
        import sys

        code = (
            "from uttlabel._kernels import backend_name; print(backend_name())"
        )
        out = subprocess.run(
            [sys.executable, "-c", code],
            capture_output=True,
            text=True,
            env={"PATH": "/usr/bin:/bin", "UTTLABEL_BACKEND": "python"},
        )
        assert out.stdout.strip() == "python"
