"""Sliding-window segments and score-weighted feature pooling.

A video is cut into fixed-length windows; each window gets a non-action
confidence score from the shot classifier (the window plays the role of
the shot in the [in, out, all] representation). The video feature is the
convex combination of segment features with weights

    w_i = exp(-alpha * s_i) / sum_j exp(-alpha * s_j)

so alpha = 0 gives average pooling and alpha -> infinity keeps only the
segment with the lowest non-action score.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import ShotRecord
from .models import LinearModel
from .nonaction import shot_feature
from .pipeline import EncodedVideo, region_feature


@dataclass(frozen=True)
class Segment:
    start: int
    end: int

    @property
    def n_frames(self) -> int:
        return self.end - self.start + 1


@dataclass
class PooledFeature:
    """Weighted segment combination plus the pieces it was built from."""

    values: np.ndarray
    weights: np.ndarray
    scores: np.ndarray
    segments: list


def make_segments(n_frames: int, window: int = 25, stride=None) -> list:
    """Tile [1, n_frames] with sliding windows.

    A trailing window shorter than half the window size is merged into the
    previous segment instead of being kept on its own.
    """
    if n_frames < 1:
        raise ValueError("video must have at least 1 frame")
    if window < 1:
        raise ValueError("window must be >= 1")
    stride = window if stride is None else stride
    if stride < 1:
        raise ValueError("stride must be >= 1")
    segments = []
    start = 1
    while start <= n_frames:
        segments.append(Segment(start=start, end=min(start + window - 1, n_frames)))
        start += stride
    while len(segments) > 1 and segments[-1].n_frames < window / 2:
        last = segments.pop()
        prev = segments.pop()
        segments.append(Segment(start=prev.start, end=max(prev.end, last.end)))
    return segments


def softmax_weights(scores, alpha: float) -> np.ndarray:
    """Eq-style weights: lower score, higher weight; weights sum to 1.

    alpha = inf puts all weight on the earliest minimum-score segment.
    """
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim != 1 or len(s) == 0:
        raise ValueError("scores must be a non-empty 1-D array")
    if not np.all(np.isfinite(s)):
        raise ValueError("segment scores must be finite")
    if math.isinf(alpha):
        w = np.zeros_like(s)
        w[int(np.argmin(s))] = 1.0
        return w
    e = np.exp(-alpha * (s - s.min()))
    return e / e.sum()


def weighted_pool(features, scores, alpha: float) -> PooledFeature:
    """Combine per-segment features with softmax weights over scores."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] != len(scores):
        raise ValueError("features must be (n_segments, D) matching scores")
    w = softmax_weights(scores, alpha)
    return PooledFeature(
        values=w @ features,
        weights=w,
        scores=np.asarray(scores, dtype=np.float64),
        segments=[],
    )


def segment_features(
    ev: EncodedVideo, segments, fuse_dense: bool = False
) -> np.ndarray:
    """Per-segment representation: normalized FV, dense means appended on request."""
    return np.stack(
        [
            region_feature(
                ev, ev.range_mask(seg.start, seg.end), include_dense=fuse_dense
            )
            for seg in segments
        ]
    )


def segment_scores(
    ev: EncodedVideo, segments, nonaction_model: LinearModel
) -> np.ndarray:
    """Non-action scores of segments via the shot-style [in, out, all] triple."""
    triples = np.stack(
        [
            shot_feature(ev, ShotRecord(start=seg.start, end=seg.end)).full
            for seg in segments
        ]
    )
    return nonaction_model.decision(triples)


def video_feature(
    ev: EncodedVideo,
    nonaction_model: LinearModel,
    alpha: float = 1.0,
    window: int = 25,
    stride=None,
    fuse_dense: bool = False,
) -> PooledFeature:
    """Segment, score, and pool one encoded video into a single feature."""
    segments = make_segments(ev.n_frames, window=window, stride=stride)
    phis = segment_features(ev, segments, fuse_dense=fuse_dense)
    scores = segment_scores(ev, segments, nonaction_model)
    pooled = weighted_pool(phis, scores, alpha)
    pooled.segments = segments
    return pooled
