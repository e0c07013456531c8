"""Diagonal-covariance Gaussian mixtures fit by EM with k-means++ init."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

WEIGHT_FLOOR = 1e-6
VARIANCE_FLOOR_SCALE = 1e-4


@dataclass(frozen=True)
class GmmModel:
    """Mixture parameters; variances are per-dimension (diagonal) and floored."""

    weights: np.ndarray  # (k,) sums to 1
    means: np.ndarray  # (k, d)
    variances: np.ndarray  # (k, d)
    fit_log_likelihoods: tuple = field(default=(), compare=False)

    @property
    def k(self) -> int:
        return len(self.weights)

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def log_prob(self, X) -> np.ndarray:
        """Per-sample, per-component log of weight * gaussian density, (n, k)."""
        X = _check_input(X, self.dim)
        inv_var = 1.0 / self.variances  # (k, d)
        log_det = np.sum(np.log(self.variances), axis=1)  # (k,)
        quad = (
            (X**2) @ inv_var.T
            - 2.0 * (X @ (self.means * inv_var).T)
            + np.sum(self.means**2 * inv_var, axis=1)
        )
        log_norm = -0.5 * (self.dim * np.log(2.0 * np.pi) + log_det)
        return np.log(self.weights) + log_norm - 0.5 * quad

    def score_samples(self, X) -> np.ndarray:
        """Log-likelihood of each sample under the mixture, (n,)."""
        return _logsumexp(self.log_prob(X))

    def responsibilities(self, X) -> np.ndarray:
        """Posterior component probabilities for each sample, (n, k)."""
        lp = self.log_prob(X)
        return np.exp(lp - _logsumexp(lp)[:, None])


def fit_gmm(
    X,
    k: int,
    seed: int = 0,
    max_iter: int = 200,
    tol: float = 1e-6,
    kmeans_iters: int = 10,
) -> GmmModel:
    """Fit a diagonal GMM by EM.

    Initialization is k-means++ followed by a few Lloyd iterations, all
    driven by ``seed``. EM stops when the gain in mean log-likelihood
    drops below tol * |LL| or after max_iter iterations. The recorded
    per-iteration mean log-likelihoods are non-decreasing.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be 2-D (n, d)")
    n, d = X.shape
    if k < 1:
        raise ValueError("k must be >= 1")
    if n < k:
        raise ValueError(f"need at least k={k} samples, got {n}")

    var_floor = np.maximum(VARIANCE_FLOOR_SCALE * X.var(axis=0), 1e-12)
    rng = np.random.default_rng(seed)
    means = _kmeans(X, k, rng, kmeans_iters)
    weights, variances = _init_from_assignment(X, means, var_floor)

    model = GmmModel(weights=weights, means=means, variances=variances)
    history = []
    prev = -np.inf
    for _ in range(max_iter):
        lp = model.log_prob(X)
        sample_ll = _logsumexp(lp)
        ll = float(sample_ll.mean())
        history.append(ll)
        if ll - prev < tol * abs(ll):
            break
        prev = ll
        resp = np.exp(lp - sample_ll[:, None])
        model = _m_step(X, resp, var_floor)
    return GmmModel(
        weights=model.weights,
        means=model.means,
        variances=model.variances,
        fit_log_likelihoods=tuple(history),
    )


def _m_step(X, resp, var_floor) -> GmmModel:
    n = X.shape[0]
    mass = resp.sum(axis=0)  # (k,)
    if np.any(mass < 1e-12):
        dead = int(np.argmin(mass))
        raise RuntimeError(
            f"GMM component {dead} collapsed (no responsibility mass)"
        )
    means = (resp.T @ X) / mass[:, None]
    second = (resp.T @ (X**2)) / mass[:, None]
    variances = np.maximum(second - means**2, var_floor)
    weights = np.maximum(mass / n, WEIGHT_FLOOR)
    weights = weights / weights.sum()
    return GmmModel(weights=weights, means=means, variances=variances)


def _kmeans(X, k, rng, iters) -> np.ndarray:
    centers = _kmeans_pp(X, k, rng)
    for _ in range(iters):
        d2 = _sq_dists(X, centers)
        assign = d2.argmin(axis=1)
        for c in range(k):
            mask = assign == c
            if mask.any():
                centers[c] = X[mask].mean(axis=0)
            else:
                centers[c] = X[int(np.argmax(d2.min(axis=1)))]
    return centers


def _kmeans_pp(X, k, rng) -> np.ndarray:
    n = X.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = ((X - X[chosen[0]]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            nxt = int(rng.integers(n))
        else:
            nxt = int(rng.choice(n, p=d2 / total))
        chosen.append(nxt)
        d2 = np.minimum(d2, ((X - X[nxt]) ** 2).sum(axis=1))
    return X[chosen].astype(np.float64).copy()


def _init_from_assignment(X, centers, var_floor):
    n, _ = X.shape
    k = centers.shape[0]
    assign = _sq_dists(X, centers).argmin(axis=1)
    weights = np.empty(k)
    variances = np.empty_like(centers)
    global_var = np.maximum(X.var(axis=0), var_floor)
    for c in range(k):
        mask = assign == c
        weights[c] = mask.sum() / n
        if mask.sum() >= 2:
            variances[c] = np.maximum(X[mask].var(axis=0), var_floor)
        else:
            variances[c] = global_var
    weights = np.maximum(weights, WEIGHT_FLOOR)
    weights = weights / weights.sum()
    return weights, variances


def _check_input(X, dim) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != dim:
        raise ValueError(f"expected (n, {dim}) samples, got shape {X.shape}")
    return X


def _sq_dists(X, centers) -> np.ndarray:
    return (
        (X**2).sum(axis=1)[:, None]
        - 2.0 * X @ centers.T
        + (centers**2).sum(axis=1)[None, :]
    )


def _logsumexp(A) -> np.ndarray:
    m = A.max(axis=1)
    return m + np.log(np.exp(A - m[:, None]).sum(axis=1))
