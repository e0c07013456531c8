import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from segment_purify import (
    fit_lssvm,
    fit_one_vs_rest,
    fit_svr,
    lssvm_kkt_residual,
    softmax,
)
from segment_purify.models import decision_matrix, svr_gradient, svr_objective


def saddle_oracle(X, y, gamma):
    """Solve the dual saddle system directly, independent of the library path."""
    n = len(y)
    K = X @ X.T
    A = np.block(
        [[np.zeros((1, 1)), np.ones((1, n))], [np.ones((n, 1)), K + np.eye(n) / gamma]]
    )
    sol = np.linalg.solve(A, np.concatenate([[0.0], y]))
    b, a = sol[0], sol[1:]
    return X.T @ a, b


class TestLssvm:
    def test_two_point_hand_case(self):
        # x=-1 labeled -1, x=+1 labeled +1: b = 0, w = 2g/(2g+1) > 0
        X = np.array([[-1.0], [1.0]])
        y = np.array([-1.0, 1.0])
        for gamma in (0.1, 1.0, 10.0):
            model = fit_lssvm(X, y, gamma=gamma, solver="dual")
            assert abs(model.b) < 1e-12
            assert np.allclose(model.w, [2 * gamma / (2 * gamma + 1)], atol=1e-12)
            assert abs(model.decision(np.array([0.0]))) < 1e-12
            assert model.decision(np.array([1.0])) > 0
            # training points score with the right signs
            assert np.all(np.sign(model.decision(X)) == y)

    def test_strong_regularization_limit(self):
        # gamma -> 0 forces the constant model b = mean(y)
        X = np.array([[0.0, 1.0], [1.0, 0.0], [2.0, 2.0]])
        y = np.array([1.0, 1.0, -1.0])
        model = fit_lssvm(X, y, gamma=1e-10, solver="dual")
        assert abs(model.b - y.mean()) < 1e-6
        assert np.allclose(model.decision(X), y.mean(), atol=1e-6)
        assert np.allclose(model.dual_coef, 1e-10 * (y - y.mean()), rtol=1e-4)

    def test_dual_primal_agree(self, rng):
        for _ in range(20):
            n = int(rng.integers(4, 21))
            D = int(rng.integers(1, 11))
            X = rng.normal(size=(n, D))
            y = np.where(rng.random(n) < 0.5, -1.0, 1.0)
            if np.all(y == y[0]):
                y[0] = -y[0]
            gamma = float(10 ** rng.uniform(-2, 2))
            dual = fit_lssvm(X, y, gamma=gamma, solver="dual")
            primal = fit_lssvm(X, y, gamma=gamma, solver="primal")
            Xq = rng.normal(size=(8, D))
            assert np.allclose(dual.decision(Xq), primal.decision(Xq), atol=1e-6)

    def test_kkt_residual_small(self, rng):
        X = rng.normal(size=(15, 4))
        y = np.where(rng.random(15) < 0.5, -1.0, 1.0)
        y[:2] = [1.0, -1.0]
        for solver in ("dual", "primal"):
            model = fit_lssvm(X, y, gamma=2.0, solver=solver)
            assert lssvm_kkt_residual(model, X, y) < 1e-8

    def test_one_vs_rest_thirteen_classes(self, rng):
        classes = [f"act{i:02d}" for i in range(13)]
        labels = np.array(classes * 4)
        X = rng.normal(size=(len(labels), 6))
        models = fit_one_vs_rest(X, labels, gamma=1.0)
        assert sorted(models) == classes
        # each model is the binary classifier with that class positive
        c = classes[3]
        y = np.where(labels == c, 1.0, -1.0)
        direct = fit_lssvm(X, y, gamma=1.0)
        assert np.allclose(models[c].w, direct.w)
        assert models[c].b == direct.b
        mat = decision_matrix(models, X[:3])
        assert mat.shape == (3, 13)

    def test_predict_linearity_and_constant_model(self, rng):
        X = rng.normal(size=(10, 3))
        y = np.where(rng.random(10) < 0.5, -1.0, 1.0)
        y[:2] = [1.0, -1.0]
        model = fit_lssvm(X, y)
        x1, x2 = rng.normal(size=3), rng.normal(size=3)
        lhs = model.decision(x1 + x2) - model.b
        rhs = (model.decision(x1) - model.b) + (model.decision(x2) - model.b)
        assert abs(lhs - rhs) < 1e-9
        from segment_purify.models import LinearModel

        flat = LinearModel(w=np.zeros(3), b=0.25)
        assert np.allclose(flat.decision(rng.normal(size=(5, 3))), 0.25)

    def test_errors(self, rng):
        X = rng.normal(size=(5, 2))
        with pytest.raises(ValueError, match="both classes"):
            fit_lssvm(X, np.ones(5))
        with pytest.raises(ValueError):
            fit_lssvm(X, np.array([1.0, -1.0, 1.0, -1.0, 1.0]), gamma=0.0)
        with pytest.raises(ValueError):
            fit_lssvm(X[:1], np.array([1.0]))
        model = fit_lssvm(X, np.array([1.0, -1.0, 1.0, -1.0, 1.0]))
        with pytest.raises(ValueError, match="dim"):
            model.decision(np.zeros(7))

    def test_matches_saddle_oracle(self, rng):
        X = rng.normal(size=(8, 3))
        y = np.where(rng.random(8) < 0.5, -1.0, 1.0)
        y[:2] = [1.0, -1.0]
        w, b = saddle_oracle(X, y, gamma=3.0)
        model = fit_lssvm(X, y, gamma=3.0, solver="auto")
        assert np.allclose(model.w, w, atol=1e-8)
        assert abs(model.b - b) < 1e-8


class TestSvr:
    def test_line_hand_case(self):
        # x_k = k c, t_k = k: normal equations give u -> 1/c as lam -> 0
        c = 2.5
        k = np.arange(1, 9, dtype=float)
        X = (k * c)[:, None]
        lam = 1e-10
        model = fit_svr(X, k, lam=lam)
        oracle = (X[:, 0] @ k) / (lam + X[:, 0] @ X[:, 0])
        assert np.allclose(model.u, [oracle], atol=1e-12)
        assert abs(model.u[0] - 1.0 / c) < 1e-9

    def test_zero_targets(self, rng):
        model = fit_svr(rng.normal(size=(10, 3)), np.zeros(10), lam=0.5)
        assert np.allclose(model.u, 0.0, atol=1e-14)

    def test_huge_regularization(self, rng):
        model = fit_svr(rng.normal(size=(10, 3)), rng.normal(size=10), lam=1e12)
        assert np.all(np.abs(model.u) < 1e-9)

    def test_gradient_zero_at_solution(self, rng):
        for _ in range(10):
            X = rng.normal(size=(12, 4))
            t = rng.normal(size=12)
            lam = float(10 ** rng.uniform(-2, 2))
            model = fit_svr(X, t, lam=lam)
            assert np.linalg.norm(svr_gradient(model.u, X, t, lam)) < 1e-8

    def test_gradient_matches_finite_differences(self, rng):
        # checked away from the optimum, where the gradient is O(1)
        X = rng.normal(size=(10, 3))
        t = rng.normal(size=10)
        lam = 0.7
        u = rng.normal(size=3)
        g = svr_gradient(u, X, t, lam)
        h = 1e-6
        fd = np.array(
            [
                (
                    svr_objective(u + h * e, X, t, lam)
                    - svr_objective(u - h * e, X, t, lam)
                )
                / (2 * h)
                for e in np.eye(3)
            ]
        )
        assert np.linalg.norm(fd - g) / max(np.linalg.norm(g), 1.0) < 1e-4

    def test_single_pair(self):
        model = fit_svr(np.array([[2.0]]), np.array([1.0]), lam=1e-9)
        assert abs(model.u[0] - 0.5) < 1e-6

    def test_bad_lambda(self, rng):
        with pytest.raises(ValueError):
            fit_svr(rng.normal(size=(5, 2)), np.ones(5), lam=0.0)


class TestSoftmax:
    def test_uniform(self):
        assert np.allclose(softmax([0.0, 0.0, 0.0]), np.full(3, 1 / 3), atol=1e-15)

    def test_hand_case(self):
        out = softmax([np.log(2.0), 0.0])
        assert np.allclose(out, [2 / 3, 1 / 3], atol=1e-12)

    @given(st.floats(min_value=-50, max_value=50))
    @settings(max_examples=30)
    def test_shift_invariance(self, c):
        s = np.array([0.3, -1.2, 4.0])
        assert np.allclose(softmax(s + c), softmax(s), atol=1e-12)

    def test_probability_vector(self, rng):
        for _ in range(10):
            out = softmax(rng.normal(size=6) * 100)
            assert np.all(out >= 0)
            assert abs(out.sum() - 1.0) < 1e-12

    def test_rows_of_matrix(self, rng):
        S = rng.normal(size=(4, 5))
        out = softmax(S, axis=1)
        assert np.allclose(out.sum(axis=1), 1.0, atol=1e-12)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            softmax([np.inf, 0.0])

    def test_argmax_invariant_under_positive_affine(self, rng):
        s = rng.normal(size=7)
        for a, c in ((2.0, 1.5), (0.3, -4.0), (10.0, 0.0)):
            assert np.argmax(softmax(a * s + c)) == np.argmax(s)
