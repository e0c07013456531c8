"""PCA projection for local descriptors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PcaModel:
    """Learned principal subspace: rows of ``components`` are orthonormal."""

    mean: np.ndarray  # (D,)
    components: np.ndarray  # (d, D)
    eigenvalues: np.ndarray  # (d,) descending, >= 0

    @property
    def input_dim(self) -> int:
        return self.components.shape[1]

    @property
    def output_dim(self) -> int:
        return self.components.shape[0]

    def transform(self, X, whiten: bool = False) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        Z = (X - self.mean) @ self.components.T
        if whiten:
            Z = Z / np.sqrt(np.maximum(self.eigenvalues, 1e-12))
        return Z

    def inverse_transform(self, Z) -> np.ndarray:
        return np.asarray(Z, dtype=np.float64) @ self.components + self.mean


def fit_pca(X, dim: int | None = None) -> PcaModel:
    """Fit a PCA model to rows of X.

    dim defaults to half the input dimension (rounded down, at least 1).
    Eigenvalues are those of the sample covariance (n-1 denominator).
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be 2-D (n, D)")
    n, D = X.shape
    if n < 2:
        raise ValueError(f"need at least 2 samples to fit PCA, got {n}")
    if dim is None:
        dim = max(1, D // 2)
    if not 1 <= dim <= min(n, D):
        raise ValueError(f"dim {dim} out of range [1, {min(n, D)}]")
    mean = X.mean(axis=0)
    _, S, Vt = np.linalg.svd(X - mean, full_matrices=False)
    components = Vt[:dim]
    # fix a sign convention so refits on identical data are reproducible
    pivot = np.argmax(np.abs(components), axis=1)
    signs = np.sign(components[np.arange(dim), pivot])
    signs[signs == 0] = 1.0
    components = components * signs[:, None]
    eigenvalues = (S[:dim] ** 2) / (n - 1)
    return PcaModel(mean=mean, components=components, eigenvalues=eigenvalues)
