"""Closed-form least-squares SVM classification and least-squares SVR.

The LSSVM dual is the saddle system

    [0   1^T        ] [b]   [0]
    [1   K + I/gamma] [a] = [y],    K = X X^T,  w = X^T a

solved directly for small n; for wide data (n > D) an equivalent primal
ridge system in (w, b) is solved instead. Only the linear kernel is
supported, matching the normalized features this library produces.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LinearModel:
    """Linear decision function score(x) = w . x + b."""

    w: np.ndarray
    b: float
    gamma: float = 1.0
    dual_coef: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return len(self.w)

    def decision(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.dim:
            raise ValueError(
                f"feature dim {X.shape[-1]} does not match model dim {self.dim}"
            )
        return X @ self.w + self.b


@dataclass(frozen=True)
class SvrModel:
    """Squared-loss SVR weights: argmin lam * |u|^2 + sum (u.x_k - t_k)^2."""

    u: np.ndarray
    lam: float

    def predict(self, X) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.u


def fit_lssvm(X, y, gamma: float = 1.0, solver: str = "auto") -> LinearModel:
    """Train a binary LSSVM on labels in {-1, +1}.

    solver: "dual" solves the (n+1) saddle system, "primal" the (D+1)
    ridge system; "auto" picks whichever is smaller. Both give the same
    decision function.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ValueError("X must be (n, D) and y (n,)")
    n, D = X.shape
    if n < 2:
        raise ValueError("need at least 2 training points")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if not (np.any(y > 0) and np.any(y < 0)):
        raise ValueError("training labels must include both classes")

    if solver == "auto":
        solver = "primal" if D < n else "dual"
    if solver == "dual":
        K = X @ X.T
        A = np.zeros((n + 1, n + 1))
        A[0, 1:] = 1.0
        A[1:, 0] = 1.0
        A[1:, 1:] = K + np.eye(n) / gamma
        rhs = np.concatenate([[0.0], y])
        sol = _solve(A, rhs)
        b, a = sol[0], sol[1:]
        return LinearModel(w=X.T @ a, b=float(b), gamma=gamma, dual_coef=a)
    if solver == "primal":
        A = np.zeros((D + 1, D + 1))
        A[:D, :D] = X.T @ X + np.eye(D) / gamma
        A[:D, D] = X.sum(axis=0)
        A[D, :D] = X.sum(axis=0)
        A[D, D] = n
        rhs = np.concatenate([X.T @ y, [y.sum()]])
        sol = _solve(A, rhs)
        return LinearModel(w=sol[:D], b=float(sol[D]), gamma=gamma)
    raise ValueError(f"unknown solver {solver!r}")


def lssvm_kkt_residual(model: LinearModel, X, y) -> float:
    """Infinity-norm residual of the dual saddle system at the fitted model."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if model.dual_coef is not None:
        a = model.dual_coef
    else:
        a = model.gamma * (y - model.decision(X))
    r_bias = a.sum()
    r_points = model.b + X @ (X.T @ a) + a / model.gamma - y
    return float(max(abs(r_bias), np.abs(r_points).max()))


def fit_one_vs_rest(X, labels, gamma: float = 1.0, classes=None) -> dict:
    """Train one LSSVM per class with that class positive, rest negative."""
    labels = np.asarray(labels)
    if classes is None:
        classes = sorted(set(labels.tolist()))
    models = {}
    for c in classes:
        y = np.where(labels == c, 1.0, -1.0)
        models[c] = fit_lssvm(X, y, gamma=gamma)
    return models


def decision_matrix(models: dict, X) -> np.ndarray:
    """Stack per-class decision values into an (n, C) matrix, classes sorted."""
    return np.column_stack([models[c].decision(X) for c in sorted(models)])


def fit_svr(X, t, lam: float = 1.0) -> SvrModel:
    """Closed-form squared-loss SVR: solves (lam I + X^T X) u = X^T t."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    t = np.asarray(t, dtype=np.float64)
    if X.shape[0] != t.shape[0]:
        raise ValueError("X rows and targets disagree")
    if lam <= 0:
        raise ValueError("lam must be positive")
    D = X.shape[1]
    u = _solve(lam * np.eye(D) + X.T @ X, X.T @ t)
    return SvrModel(u=u, lam=lam)


def svr_objective(u, X, t, lam: float) -> float:
    r = X @ u - t
    return float(lam * u @ u + r @ r)


def svr_gradient(u, X, t, lam: float) -> np.ndarray:
    return 2.0 * lam * u + 2.0 * X.T @ (X @ u - t)


def softmax(scores, axis: int = -1) -> np.ndarray:
    """Numerically stable softmax; invariant to adding a constant."""
    s = np.asarray(scores, dtype=np.float64)
    if not np.all(np.isfinite(s)):
        raise ValueError("softmax requires finite scores")
    shifted = s - s.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def _solve(A, rhs) -> np.ndarray:
    try:
        return np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"singular linear system: {exc}") from None
