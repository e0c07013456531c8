"""Fisher Vector encoding of descriptor sets against a diagonal GMM.

The unnormalized vector stacks, for each mixture component, the weighted
first-order residuals and second-order residuals of the descriptors:

    mean block (component c, dim j):  sum_t g_t(c) * z_tcj / sqrt(w_c)
    var block  (component c, dim j):  sum_t g_t(c) * (z_tcj^2 - 1) / sqrt(2 w_c)

with z_tcj = (x_tj - mu_cj) / sigma_cj and g_t(c) the posterior
responsibility. Sums are not divided by the descriptor count, so vectors
for disjoint frame sets add exactly; power plus L2 normalization is
invariant to that scale anyway.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gmm import GmmModel


@dataclass
class UnnormalizedFV:
    """Additive Fisher Vector statistics plus the number of descriptors."""

    values: np.ndarray  # (2 * d * k,)
    support_count: int

    @property
    def dim(self) -> int:
        return len(self.values)


def fv_length(d: int, k: int) -> int:
    """Length of a Fisher Vector for d-dim descriptors and k components."""
    return 2 * d * k


def fisher_vector(descriptors, gmm: GmmModel) -> UnnormalizedFV:
    """Encode one descriptor set (possibly empty) as an unnormalized FV."""
    X = np.asarray(descriptors, dtype=np.float64)
    if X.size == 0:
        return UnnormalizedFV(
            values=np.zeros(fv_length(gmm.dim, gmm.k)), support_count=0
        )
    if X.ndim != 2 or X.shape[1] != gmm.dim:
        raise ValueError(
            f"descriptors must be (n, {gmm.dim}), got shape {X.shape}"
        )
    mean_block, var_block = _fv_blocks(X, gmm)
    values = np.concatenate([mean_block.ravel(), var_block.ravel()])
    return UnnormalizedFV(values=values, support_count=X.shape[0])


def frame_fisher_vectors(frame_indices, descriptors, gmm: GmmModel, n_frames: int):
    """Encode every frame's descriptor set of a video in one pass.

    frame_indices are 1-based and may repeat (several descriptors per
    frame). Returns (values, counts): values is (n_frames, 2dk) with a zero
    row for frames without descriptors, counts the per-frame descriptor
    counts.
    """
    idx = np.asarray(frame_indices, dtype=np.int64)
    X = np.asarray(descriptors, dtype=np.float64)
    if X.ndim != 2 and X.size == 0:
        X = X.reshape(0, gmm.dim)
    if X.shape[0] != idx.shape[0]:
        raise ValueError("frame_indices and descriptors disagree on rows")
    values = np.zeros((n_frames, fv_length(gmm.dim, gmm.k)))
    counts = np.zeros(n_frames, dtype=np.int64)
    if X.shape[0] == 0:
        return values, counts
    if X.shape[1] != gmm.dim:
        raise ValueError(f"descriptors must be (n, {gmm.dim})")
    if idx.min() < 1 or idx.max() > n_frames:
        raise ValueError(f"frame indices outside [1, {n_frames}]")

    order = np.argsort(idx, kind="stable")
    idx = idx[order]
    X = X[order]
    uniq, starts = np.unique(idx, return_index=True)
    mean_c, var_c = _fv_contributions(X, gmm)  # each (n, k*d)
    rows = uniq - 1
    values[rows, : mean_c.shape[1]] = np.add.reduceat(mean_c, starts, axis=0)
    values[rows, mean_c.shape[1] :] = np.add.reduceat(var_c, starts, axis=0)
    counts[rows] = np.diff(np.append(starts, len(idx)))
    return values, counts


def aggregate(fvs) -> UnnormalizedFV:
    """Sum unnormalized FVs over disjoint frame sets (exact additivity)."""
    fvs = list(fvs)
    if not fvs:
        raise ValueError("cannot aggregate an empty list of FVs")
    dim = fvs[0].dim
    if any(fv.dim != dim for fv in fvs):
        raise ValueError("FV dimension mismatch in aggregate")
    values = np.sum([fv.values for fv in fvs], axis=0)
    return UnnormalizedFV(
        values=values, support_count=sum(fv.support_count for fv in fvs)
    )


def power_l2_normalize(values) -> np.ndarray:
    """Signed square root followed by L2 normalization; zero maps to zero."""
    if isinstance(values, UnnormalizedFV):
        values = values.values
    v = np.sign(values) * np.sqrt(np.abs(values))
    norm = np.linalg.norm(v)
    if norm > 0:
        v = v / norm
    return v


def mean_pool(frame_indices, vectors, frame_mask) -> np.ndarray:
    """Mean of sampled per-frame vectors inside a frame set, L2-normalized.

    frame_mask is boolean over frames 1..n (index f at position f-1). When
    the set contains no sampled frame the zero vector is returned.
    """
    idx = np.asarray(frame_indices, dtype=np.int64)
    V = np.asarray(vectors, dtype=np.float64)
    keep = frame_mask[idx - 1]
    if not keep.any():
        return np.zeros(V.shape[1])
    m = V[keep].mean(axis=0)
    norm = np.linalg.norm(m)
    return m / norm if norm > 0 else m


def _fv_blocks(X, gmm: GmmModel):
    resp = gmm.responsibilities(X)  # (n, k)
    Z = (X[:, None, :] - gmm.means[None]) / np.sqrt(gmm.variances)[None]
    S1 = np.einsum("nk,nkd->kd", resp, Z)
    S2 = np.einsum("nk,nkd->kd", resp, Z * Z) - resp.sum(axis=0)[:, None]
    mean_block = S1 / np.sqrt(gmm.weights)[:, None]
    var_block = S2 / np.sqrt(2.0 * gmm.weights)[:, None]
    return mean_block, var_block


def _fv_contributions(X, gmm: GmmModel):
    """Per-descriptor FV contributions, each (n, k*d), already weight-scaled."""
    n = X.shape[0]
    resp = gmm.responsibilities(X)
    Z = (X[:, None, :] - gmm.means[None]) / np.sqrt(gmm.variances)[None]
    mean_c = (resp[:, :, None] * Z) / np.sqrt(gmm.weights)[None, :, None]
    var_c = (resp[:, :, None] * (Z * Z - 1.0)) / np.sqrt(2.0 * gmm.weights)[
        None, :, None
    ]
    return mean_c.reshape(n, -1), var_c.reshape(n, -1)
