"""Temporal-evolution video encodings built on the squared-loss SVR.

The plain encoding regresses cumulative sums of per-frame features onto
elapsed length: pairs (sum_{i<=k} phi_i -> k). The weighted variant
replaces both sides with weighted sums, using non-action-derived weights
so uninformative frames contribute little to the evolution:

    pairs (sum_{i<=k} w_i phi_i -> sum_{i<=k} w_i),  k = 1..N

The fitted regression weights are the video representation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import LinearModel, fit_svr
from .pipeline import EncodedVideo
from .pooling import make_segments, segment_features, segment_scores, softmax_weights


@dataclass(frozen=True)
class DarwinFeature:
    u: np.ndarray
    variant: str  # "plain" or "weighted"

    @property
    def dim(self) -> int:
        return len(self.u)


def darwin_encode(features, weights=None, lam: float = 1.0) -> DarwinFeature:
    """Fit the cumulative-sum regression; unit weights give the plain variant."""
    phis = np.asarray(features, dtype=np.float64)
    if phis.ndim != 2 or phis.shape[0] < 1:
        raise ValueError("features must be a non-empty (N, D) matrix")
    if weights is None:
        w = np.ones(phis.shape[0])
        variant = "plain"
    else:
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != (phis.shape[0],):
            raise ValueError("weights must match the number of feature rows")
        if np.any(w <= 0):
            raise ValueError("weights must be positive")
        variant = "weighted"
    cum_x = np.cumsum(w[:, None] * phis, axis=0)
    cum_t = np.cumsum(w)
    return DarwinFeature(u=fit_svr(cum_x, cum_t, lam=lam).u, variant=variant)


def frame_features(ev: EncodedVideo) -> np.ndarray:
    """Per-frame power+L2-normalized FVs, local channels concatenated."""
    blocks = []
    for ch in ev.fv_channels:
        raw = ev.fv[ch]
        v = np.sign(raw) * np.sqrt(np.abs(raw))
        norms = np.linalg.norm(v, axis=1, keepdims=True)
        blocks.append(v / np.where(norms > 0, norms, 1.0))
    return np.concatenate(blocks, axis=1)


def frame_weights_from_scores(
    ev: EncodedVideo, segments, scores, alpha: float
) -> np.ndarray:
    """Softmax segment weights broadcast to the frames each segment covers."""
    seg_w = softmax_weights(scores, alpha)
    w = np.empty(ev.n_frames)
    for seg, value in zip(segments, seg_w):
        w[seg.start - 1 : seg.end] = value
    return w


def darwin_video_feature(
    ev: EncodedVideo,
    nonaction_model: LinearModel | None = None,
    lam: float = 1.0,
    alpha: float = 1.0,
    window: int = 25,
    stride=None,
    per_second: bool = False,
) -> DarwinFeature:
    """Encode one video; pass a non-action model for the weighted variant.

    per_second swaps frame-level features for segment-level ones (weights
    then apply per segment instead of being broadcast to frames).
    """
    if per_second:
        segments = make_segments(ev.n_frames, window=window, stride=stride)
        phis = segment_features(ev, segments)
        if nonaction_model is None:
            return darwin_encode(phis, lam=lam)
        scores = segment_scores(ev, segments, nonaction_model)
        return darwin_encode(phis, softmax_weights(scores, alpha), lam=lam)
    phis = frame_features(ev)
    if nonaction_model is None:
        return darwin_encode(phis, lam=lam)
    segments = make_segments(ev.n_frames, window=window, stride=stride)
    scores = segment_scores(ev, segments, nonaction_model)
    weights = frame_weights_from_scores(ev, segments, scores, alpha)
    return darwin_encode(phis, weights, lam=lam)
