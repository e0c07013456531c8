"""Shot representation and the non-action classifier.

A shot [s, e] inside a video [1, n] is represented by three region
features concatenated: the shot itself, its complement, and the whole
video. The complement of a whole-video shot is the zero vector. The
classifier's positive class is non-action: higher scores mean the shot is
more likely to contain no action.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import ShotLabel, ShotRecord
from .metrics import average_precision
from .models import LinearModel, fit_lssvm
from .pipeline import EncodedVideo, region_feature

TRAINING_MODES = ("generic", "specific", "leave_one_out")


@dataclass
class ShotFeature:
    """Region features for the shot, its complement, and the whole video."""

    f_in: np.ndarray
    f_out: np.ndarray
    f_all: np.ndarray

    @property
    def full(self) -> np.ndarray:
        return np.concatenate([self.f_in, self.f_out, self.f_all])


@dataclass
class ShotScore:
    video_id: str
    shot_index: int
    score: float
    label: ShotLabel


def shot_feature_length(fv_dims, dense_dims=()) -> int:
    """Length of the concatenated [in, out, all] shot representation."""
    return 3 * (sum(fv_dims) + sum(dense_dims))


def shot_feature(ev: EncodedVideo, shot: ShotRecord) -> ShotFeature:
    """Build the [in, out, all] representation of one shot."""
    if shot.start < 1 or shot.end > ev.n_frames:
        raise ValueError(
            f"shot [{shot.start}, {shot.end}] outside video range "
            f"[1, {ev.n_frames}]"
        )
    inside = ev.range_mask(shot.start, shot.end)
    f_in = region_feature(ev, inside)
    if inside.all():
        f_out = np.zeros_like(f_in)
    else:
        f_out = region_feature(ev, ~inside)
    f_all = region_feature(ev, ev.full_mask())
    return ShotFeature(f_in=f_in, f_out=f_out, f_all=f_all)


def video_shot_features(ev: EncodedVideo) -> np.ndarray:
    """Matrix of full shot features for every shot of a video."""
    return np.stack([shot_feature(ev, s).full for s in ev.video.shots])


def shot_is_positive(video, shot: ShotRecord, mode: str, action=None) -> bool:
    """Non-action (positive) decision for one shot under a training mode.

    generic: the shot's resolved label is non-action. specific: the shot
    does not contain `action` (other actions count as non-action too).
    """
    label = shot.resolved_label
    if label is ShotLabel.UNRESOLVED:
        raise ValueError(
            f"video {video.video_id}: unresolved shot label; add an override"
        )
    if mode in ("generic", "leave_one_out"):
        return label is ShotLabel.NON_ACTION
    if mode == "specific":
        contains = video.action_label == action and label is ShotLabel.ACTION
        return not contains
    raise ValueError(f"unknown training mode {mode!r}")


def build_training_set(
    encoded: dict,
    video_ids,
    mode: str = "generic",
    action=None,
    features=None,
):
    """Assemble (X, y, index) for non-action training over the given videos.

    y is +1 for non-action, -1 otherwise. For leave_one_out, videos of
    `action` are excluded. `features` may cache video_id -> shot feature
    matrix. index lists (video_id, shot_index) per row.
    """
    if mode not in TRAINING_MODES:
        raise ValueError(f"unknown training mode {mode!r}")
    if mode in ("specific", "leave_one_out"):
        known = {ev.video.action_label for ev in encoded.values()}
        if action not in known:
            raise ValueError(f"unknown action class {action!r}")
    rows, ys, index = [], [], []
    for vid in video_ids:
        ev = encoded[vid]
        if mode == "leave_one_out" and ev.video.action_label == action:
            continue
        mat = features[vid] if features is not None else video_shot_features(ev)
        for i, shot in enumerate(ev.video.shots):
            rows.append(mat[i])
            ys.append(
                1.0 if shot_is_positive(ev.video, shot, mode, action) else -1.0
            )
            index.append((vid, i))
    if not rows:
        raise ValueError("empty training set")
    return np.stack(rows), np.asarray(ys), index


def train_nonaction(
    encoded: dict,
    video_ids,
    mode: str = "generic",
    action=None,
    gamma: float = 1.0,
    features=None,
) -> LinearModel:
    X, y, _ = build_training_set(
        encoded, video_ids, mode=mode, action=action, features=features
    )
    return fit_lssvm(X, y, gamma=gamma)


def score_shots(
    model: LinearModel, encoded: dict, video_ids, features=None
) -> list:
    """Raw non-action decision values for every shot of the given videos."""
    scores = []
    for vid in video_ids:
        ev = encoded[vid]
        mat = features[vid] if features is not None else video_shot_features(ev)
        if mat.shape[1] != model.dim:
            raise ValueError(
                f"shot feature length {mat.shape[1]} does not match "
                f"classifier dim {model.dim}"
            )
        values = model.decision(mat)
        for i, shot in enumerate(ev.video.shots):
            scores.append(
                ShotScore(
                    video_id=vid,
                    shot_index=i,
                    score=float(values[i]),
                    label=shot.resolved_label,
                )
            )
    return scores


def ap_at_k(shot_scores, k=None) -> float:
    """AP of non-action detection keeping only the top-k shots per video.

    k=None (or infinity) keeps every shot. Per video the k highest-scoring
    shots are kept (stable ties), then kept shots are pooled across videos
    and scored with non-action as the positive label.
    """
    if k is not None and not np.isinf(k):
        if k < 1:
            raise ValueError("k must be >= 1")
        k = int(k)
    by_video = {}
    for pos, s in enumerate(shot_scores):
        by_video.setdefault(s.video_id, []).append(pos)
    kept = []
    for vid in by_video:
        positions = by_video[vid]
        if k is None or np.isinf(k) or len(positions) <= k:
            kept.extend(positions)
            continue
        values = np.array([shot_scores[p].score for p in positions])
        order = np.argsort(-values, kind="stable")[:k]
        kept.extend(positions[i] for i in sorted(order.tolist()))
    kept.sort()
    scores = np.array([shot_scores[p].score for p in kept])
    labels = np.array(
        [shot_scores[p].label is ShotLabel.NON_ACTION for p in kept]
    )
    return average_precision(scores, labels).ap
