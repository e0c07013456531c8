"""Experiment harness: recognition pipelines, oracle-pruning sweeps, reports.

Three feature pipelines are supported, crossed with three weighting modes:

    feature   "whole"  one normalized vector over all frames (baseline)
              "pooled" score-weighted sliding-window pooling
              "darwin" temporal-evolution encoding (weighted or plain)
    weighting "none" | "generic" | "specific"

"specific" trains one non-action classifier per action class and gives
every class its own video features; it cannot be combined with the darwin
pipeline. Reports carry per-class AP plus the unweighted mean.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

import numpy as np

from .darwin import darwin_video_feature
from .dataset import DatasetManifest, ShotLabel, ShotRecord
from .fisher import power_l2_normalize
from .metrics import average_precision, mean_average_precision
from .models import decision_matrix, fit_lssvm, fit_one_vs_rest, softmax
from .nonaction import (
    ap_at_k,
    score_shots,
    shot_feature,
    train_nonaction,
    video_shot_features,
)
from .pipeline import EncodedVideo, region_feature, split_videos
from .pooling import make_segments, segment_features, softmax_weights

ALPHA_GRID = (0.0, 0.5, 1.0, 2.0, 4.0, 8.0)
GAMMA_GRID = tuple(10.0**e for e in range(-3, 4))


@dataclass
class SweepPoint:
    """Pruning-sweep result at one removal probability."""

    p: float
    repeats: int
    map_mean: float
    map_std: float
    per_repeat: tuple


@dataclass
class ExperimentConfig:
    task: str = "recognition"  # or "nonaction_loo"
    feature: str = "pooled"  # whole | pooled | darwin
    weighting: str = "generic"  # none | generic | specific
    alpha: float = 1.0
    tune_alpha: bool = False
    alpha_grid: tuple = ALPHA_GRID
    fuse_dense: bool = False
    gamma: float = 1.0
    tune_gamma: bool = False
    gamma_grid: tuple = GAMMA_GRID
    svr_lambda: float = 1.0
    window: int = 25
    stride: int | None = None
    class_softmax: bool = True
    train_fraction: float = 0.5

    def validate(self) -> None:
        if self.task not in ("recognition", "nonaction_loo"):
            raise ValueError(f"unknown task {self.task!r}")
        if self.feature not in ("whole", "pooled", "darwin"):
            raise ValueError(f"unknown feature pipeline {self.feature!r}")
        if self.weighting not in ("none", "generic", "specific"):
            raise ValueError(f"unknown weighting mode {self.weighting!r}")
        if self.feature == "darwin" and self.weighting == "specific":
            raise ValueError(
                "darwin features only support generic weighting (or none)"
            )
        if self.gamma <= 0 or self.svr_lambda <= 0:
            raise ValueError("gamma and svr_lambda must be positive")
        if self.window < 1 or (self.stride is not None and self.stride < 1):
            raise ValueError("window and stride must be >= 1")


@dataclass
class EvalReport:
    """Per-class AP table plus everything needed to reproduce it."""

    task: str
    per_class_ap: dict
    mean_ap: float | None
    config: dict = field(default_factory=dict)
    loo_pairs: dict | None = None
    tuned_alpha: float | None = None
    tuned_gamma: float | None = None
    curves: dict | None = None

    def to_dict(self) -> dict:
        out = {
            "task": self.task,
            "per_class_ap": self.per_class_ap,
            "mean_ap": self.mean_ap,
            "config": self.config,
        }
        if self.loo_pairs is not None:
            out["loo_pairs"] = self.loo_pairs
        if self.tuned_alpha is not None:
            out["tuned_alpha"] = self.tuned_alpha
        if self.tuned_gamma is not None:
            out["tuned_gamma"] = self.tuned_gamma
        if self.curves is not None:
            out["curves"] = {
                c: {
                    "ap": curve.ap,
                    "recall": curve.recall.tolist(),
                    "precision": curve.precision.tolist(),
                }
                for c, curve in self.curves.items()
            }
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def csv_rows(self) -> list:
        if self.loo_pairs is not None:
            rows = [("class", "ap_full", "ap_leave_one_out")]
            for c in sorted(self.loo_pairs):
                pair = self.loo_pairs[c]
                rows.append((c, f"{pair['full']:.6f}", f"{pair['loo']:.6f}"))
            return rows
        rows = [("class", "ap")]
        for c in sorted(self.per_class_ap):
            rows.append((c, f"{self.per_class_ap[c]:.6f}"))
        if self.mean_ap is not None:
            rows.append(("mean", f"{self.mean_ap:.6f}"))
        return rows


# ---------------------------------------------------------------------------
# whole-video features and oracle pruning
# ---------------------------------------------------------------------------


@dataclass
class ShotSums:
    """Per-shot additive statistics of one video, for exact prune-by-subtraction."""

    fv_shot: dict  # channel -> (n_shots, 2dk)
    dense_sum: dict  # channel -> (n_shots, Dc)
    dense_count: dict  # channel -> (n_shots,)
    nonaction_shots: np.ndarray  # indices of shots resolved non-action


def video_shot_sums(ev: EncodedVideo) -> ShotSums:
    shots = ev.video.shots
    fv_shot = {}
    for ch in ev.fv_channels:
        rows = np.stack(
            [ev.fv[ch][s.start - 1 : s.end].sum(axis=0) for s in shots]
        )
        fv_shot[ch] = rows
    dense_sum, dense_count = {}, {}
    for ch in ev.dense_channels:
        idx, vec = ev.dense[ch]
        sums = np.zeros((len(shots), vec.shape[1]))
        counts = np.zeros(len(shots), dtype=np.int64)
        for i, s in enumerate(shots):
            inside = (idx >= s.start) & (idx <= s.end)
            sums[i] = vec[inside].sum(axis=0)
            counts[i] = int(inside.sum())
        dense_sum[ch] = sums
        dense_count[ch] = counts
    nonact = np.array(
        [
            i
            for i, s in enumerate(shots)
            if s.resolved_label is ShotLabel.NON_ACTION
        ],
        dtype=np.int64,
    )
    return ShotSums(
        fv_shot=fv_shot,
        dense_sum=dense_sum,
        dense_count=dense_count,
        nonaction_shots=nonact,
    )


def pruned_video_feature(sums: ShotSums, dropped, include_dense: bool = True):
    """Video feature with the given shot indices removed, via subtraction."""
    keep = np.ones(next(iter(sums.fv_shot.values())).shape[0], dtype=bool)
    keep[list(dropped)] = False
    parts = []
    for ch in sorted(sums.fv_shot):
        parts.append(power_l2_normalize(sums.fv_shot[ch][keep].sum(axis=0)))
    if include_dense:
        for ch in sorted(sums.dense_sum):
            total = sums.dense_sum[ch][keep].sum(axis=0)
            count = sums.dense_count[ch][keep].sum()
            if count == 0:
                parts.append(np.zeros_like(total))
            else:
                m = total / count
                norm = np.linalg.norm(m)
                parts.append(m / norm if norm > 0 else m)
    return np.concatenate(parts)


def whole_video_feature(ev: EncodedVideo, include_dense: bool = True):
    return region_feature(ev, ev.full_mask(), include_dense=include_dense)


def simulate_pruning(
    manifest: DatasetManifest,
    encoded: dict,
    p_grid,
    repeats: int = 20,
    seed: int = 0,
    gamma: float = 1.0,
    retrain: bool = True,
    include_dense: bool = True,
    train_fraction: float = 0.5,
) -> list:
    """Oracle-pruning benefit sweep: drop non-action shots with probability p.

    Per repeat, every video (train and test alike) loses each of its
    non-action shots independently with probability p; video features are
    rebuilt by exact subtraction of the dropped shots' statistics; the
    one-vs-rest classifiers are retrained (unless retrain=False, which
    reuses classifiers trained on unpruned features) and test mAP is
    recorded. Returns one SweepPoint (mean, std over repeats) per p.
    """
    p_grid = [float(p) for p in np.atleast_1d(p_grid)]
    if any(p < 0 or p > 1 for p in p_grid):
        raise ValueError("pruning probabilities must lie in [0, 1]")
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    train_ids, test_ids = split_videos(manifest, train_fraction)
    ordered = [v.video_id for v in manifest.videos]
    sums = {vid: video_shot_sums(encoded[vid]) for vid in ordered}
    labels = {vid: encoded[vid].video.action_label for vid in ordered}
    classes = manifest.classes

    fixed_models = None
    if not retrain:
        X_train = np.stack(
            [pruned_video_feature(sums[v], (), include_dense) for v in train_ids]
        )
        y_train = np.array([labels[v] for v in train_ids])
        fixed_models = fit_one_vs_rest(X_train, y_train, gamma=gamma, classes=classes)

    points = []
    for pi, p in enumerate(p_grid):
        per_repeat = []
        for r in range(repeats):
            rng = np.random.default_rng([seed, pi, r])
            feats = {}
            for vid in ordered:
                na = sums[vid].nonaction_shots
                drop = na[rng.random(len(na)) < p] if len(na) else ()
                feats[vid] = pruned_video_feature(sums[vid], drop, include_dense)
            if retrain:
                X_train = np.stack([feats[v] for v in train_ids])
                y_train = np.array([labels[v] for v in train_ids])
                ovr = fit_one_vs_rest(
                    X_train, y_train, gamma=gamma, classes=classes
                )
            else:
                ovr = fixed_models
            X_test = np.stack([feats[v] for v in test_ids])
            y_test = np.array([labels[v] for v in test_ids])
            scores = decision_matrix(ovr, X_test)
            aps = [
                average_precision(scores[:, ci], y_test == c).ap
                for ci, c in enumerate(classes)
            ]
            per_repeat.append(mean_average_precision(aps))
        arr = np.array(per_repeat)
        # identical repeats (p = 0 or 1) have exactly zero spread
        std = 0.0 if arr.max() == arr.min() else float(arr.std())
        points.append(
            SweepPoint(
                p=p,
                repeats=repeats,
                map_mean=float(arr.mean()),
                map_std=std,
                per_repeat=tuple(per_repeat),
            )
        )
    return points


# ---------------------------------------------------------------------------
# recognition experiments
# ---------------------------------------------------------------------------


@dataclass
class _SegmentCache:
    """Per-video segment features and, per scoring model, segment scores."""

    phis: np.ndarray
    triples: np.ndarray


def _segment_cache(encoded, ids, config) -> dict:
    cache = {}
    for vid in ids:
        ev = encoded[vid]
        segments = make_segments(
            ev.n_frames, window=config.window, stride=config.stride
        )
        phis = segment_features(ev, segments, fuse_dense=config.fuse_dense)
        triples = np.stack(
            [
                shot_feature(ev, ShotRecord(start=s.start, end=s.end)).full
                for s in segments
            ]
        )
        cache[vid] = _SegmentCache(phis=phis, triples=triples)
    return cache


def _pooled_features(cache, ids, model, alpha) -> dict:
    feats = {}
    for vid in ids:
        entry = cache[vid]
        if model is None:
            w = np.full(entry.phis.shape[0], 1.0 / entry.phis.shape[0])
        else:
            w = softmax_weights(model.decision(entry.triples), alpha)
        feats[vid] = w @ entry.phis
    return feats


def _sub_split(manifest, ids, fraction=0.5):
    """Stratified alternation within an id subset, in manifest order."""
    members = set(ids)
    counters = {}
    first, second = [], []
    for video in manifest.videos:
        if video.video_id not in members:
            continue
        i = counters.get(video.action_label, 0)
        counters[video.action_label] = i + 1
        took = int((i + 1) * fraction) - int(i * fraction)
        (first if took else second).append(video.video_id)
    return first, second


def _ovr_map(feats_by_class, labels, fit_ids, eval_ids, classes, gamma):
    """Train per-class classifiers and return (mAP, per-class AP, scores).

    feats_by_class maps class -> {video_id -> feature}; generic pipelines
    pass the same dict for every class.
    """
    score_cols = []
    for c in classes:
        feats = feats_by_class[c]
        X_fit = np.stack([feats[v] for v in fit_ids])
        y_fit = np.where(
            np.array([labels[v] for v in fit_ids]) == c, 1.0, -1.0
        )
        model = fit_lssvm(X_fit, y_fit, gamma=gamma)
        X_eval = np.stack([feats[v] for v in eval_ids])
        score_cols.append(model.decision(X_eval))
    return np.column_stack(score_cols)


def _score_map(scores, labels, eval_ids, classes, class_softmax):
    if class_softmax:
        scores = softmax(scores, axis=1)
    y = np.array([labels[v] for v in eval_ids])
    curves = {
        c: average_precision(scores[:, ci], y == c)
        for ci, c in enumerate(classes)
    }
    per_class = {c: curves[c].ap for c in classes}
    return per_class, mean_average_precision(per_class.values()), curves


def run_experiment(
    manifest: DatasetManifest, encoded: dict, config: ExperimentConfig
) -> EvalReport:
    """Run one experiment end-to-end and return its report."""
    config.validate()
    if config.task == "nonaction_loo":
        return loo_comparison(
            manifest,
            encoded,
            gamma=config.gamma,
            train_fraction=config.train_fraction,
            config=config,
        )
    train_ids, test_ids = split_videos(manifest, config.train_fraction)
    all_ids = train_ids + test_ids
    classes = manifest.classes
    labels = {vid: encoded[vid].video.action_label for vid in all_ids}

    tuned_alpha = None
    tuned_gamma = None
    shot_feats = None
    if config.weighting != "none":
        shot_feats = {vid: video_shot_features(encoded[vid]) for vid in all_ids}

    if config.feature == "whole":
        feats = {
            vid: whole_video_feature(encoded[vid], include_dense=config.fuse_dense)
            for vid in all_ids
        }
        feats_by_class = {c: feats for c in classes}
    elif config.feature == "pooled":
        cache = _segment_cache(encoded, all_ids, config)
        if config.weighting == "none":
            feats = _pooled_features(cache, all_ids, None, 0.0)
            feats_by_class = {c: feats for c in classes}
        elif config.weighting == "generic":
            model = train_nonaction(
                encoded,
                train_ids,
                mode="generic",
                gamma=config.gamma,
                features=shot_feats,
            )
            alpha = config.alpha
            if config.tune_alpha:
                alpha = _tune_alpha_generic(
                    manifest, cache, model, labels, train_ids, classes, config
                )
                tuned_alpha = alpha
            feats = _pooled_features(cache, all_ids, model, alpha)
            feats_by_class = {c: feats for c in classes}
        else:  # specific
            per_class_models = {
                c: train_nonaction(
                    encoded,
                    train_ids,
                    mode="specific",
                    action=c,
                    gamma=config.gamma,
                    features=shot_feats,
                )
                for c in classes
            }
            alpha = config.alpha
            if config.tune_alpha:
                alpha = _tune_alpha_specific(
                    manifest, cache, per_class_models, labels, train_ids, classes, config
                )
                tuned_alpha = alpha
            feats_by_class = {
                c: _pooled_features(cache, all_ids, per_class_models[c], alpha)
                for c in classes
            }
    else:  # darwin
        model = None
        if config.weighting == "generic":
            model = train_nonaction(
                encoded,
                train_ids,
                mode="generic",
                gamma=config.gamma,
                features=shot_feats,
            )
        feats = {
            vid: darwin_video_feature(
                encoded[vid],
                nonaction_model=model,
                lam=config.svr_lambda,
                alpha=config.alpha,
                window=config.window,
                stride=config.stride,
            ).u
            for vid in all_ids
        }
        feats_by_class = {c: feats for c in classes}

    gamma = config.gamma
    if config.tune_gamma:
        fit_ids, val_ids = _sub_split(manifest, train_ids)
        best = None
        for g in config.gamma_grid:
            scores = _ovr_map(feats_by_class, labels, fit_ids, val_ids, classes, g)
            _, val_map, _ = _score_map(
                scores, labels, val_ids, classes, config.class_softmax
            )
            if best is None or val_map > best[1]:
                best = (g, val_map)
        gamma = best[0]
        tuned_gamma = gamma

    scores = _ovr_map(feats_by_class, labels, train_ids, test_ids, classes, gamma)
    per_class, mean_ap, curves = _score_map(
        scores, labels, test_ids, classes, config.class_softmax
    )
    return EvalReport(
        task="recognition",
        per_class_ap=per_class,
        mean_ap=mean_ap,
        config=asdict(config),
        tuned_alpha=tuned_alpha,
        tuned_gamma=tuned_gamma,
        curves=curves,
    )


def _tune_alpha_generic(manifest, cache, model, labels, train_ids, classes, config):
    fit_ids, val_ids = _sub_split(manifest, train_ids)
    best = None
    for alpha in config.alpha_grid:
        feats = _pooled_features(cache, fit_ids + val_ids, model, alpha)
        feats_by_class = {c: feats for c in classes}
        scores = _ovr_map(
            feats_by_class, labels, fit_ids, val_ids, classes, config.gamma
        )
        _, val_map, _ = _score_map(
            scores, labels, val_ids, classes, config.class_softmax
        )
        if best is None or val_map > best[1]:
            best = (alpha, val_map)
    return best[0]


def _tune_alpha_specific(
    manifest, cache, per_class_models, labels, train_ids, classes, config
):
    fit_ids, val_ids = _sub_split(manifest, train_ids)
    best = None
    for alpha in config.alpha_grid:
        feats_by_class = {
            c: _pooled_features(
                cache, fit_ids + val_ids, per_class_models[c], alpha
            )
            for c in classes
        }
        scores = _ovr_map(
            feats_by_class, labels, fit_ids, val_ids, classes, config.gamma
        )
        _, val_map, _ = _score_map(
            scores, labels, val_ids, classes, config.class_softmax
        )
        if best is None or val_map > best[1]:
            best = (alpha, val_map)
    return best[0]


def tune_action_gamma(
    manifest: DatasetManifest,
    feats: dict,
    train_ids,
    grid=GAMMA_GRID,
    class_softmax: bool = True,
) -> float:
    """Pick the recognition gamma maximizing mAP on a validation split."""
    classes = manifest.classes
    labels = {vid: manifest.video(vid).action_label for vid in train_ids}
    feats_by_class = {c: feats for c in classes}
    fit_ids, val_ids = _sub_split(manifest, train_ids)
    best = None
    for g in grid:
        scores = _ovr_map(feats_by_class, labels, fit_ids, val_ids, classes, g)
        _, val_map, _ = _score_map(scores, labels, val_ids, classes, class_softmax)
        if best is None or val_map > best[1]:
            best = (g, val_map)
    return best[0]


def tune_nonaction_gamma(
    manifest: DatasetManifest,
    encoded: dict,
    train_ids,
    mode: str = "generic",
    action=None,
    grid=GAMMA_GRID,
    features=None,
) -> float:
    """Pick the non-action gamma maximizing shot AP on a validation split."""
    fit_ids, val_ids = _sub_split(manifest, train_ids)
    best = None
    for g in grid:
        model = train_nonaction(
            encoded, fit_ids, mode=mode, action=action, gamma=g, features=features
        )
        scored = score_shots(model, encoded, val_ids, features=features)
        ap = ap_at_k(scored, k=None)
        if best is None or ap > best[1]:
            best = (g, ap)
    return best[0]


# ---------------------------------------------------------------------------
# leave-one-class-out generalization
# ---------------------------------------------------------------------------


def loo_comparison(
    manifest: DatasetManifest,
    encoded: dict,
    gamma: float = 1.0,
    train_fraction: float = 0.5,
    config: ExperimentConfig | None = None,
) -> EvalReport:
    """Full-training vs leave-one-class-out non-action AP per left-out class.

    Both classifiers are evaluated on the test-split shots of the left-out
    class's videos only.
    """
    train_ids, test_ids = split_videos(manifest, train_fraction)
    shot_feats = {
        vid: video_shot_features(encoded[vid]) for vid in train_ids + test_ids
    }
    full = train_nonaction(
        encoded, train_ids, mode="generic", gamma=gamma, features=shot_feats
    )
    pairs = {}
    for c in manifest.classes:
        held_out = [
            vid for vid in test_ids if encoded[vid].video.action_label == c
        ]
        if not held_out:
            continue
        loo = train_nonaction(
            encoded,
            train_ids,
            mode="leave_one_out",
            action=c,
            gamma=gamma,
            features=shot_feats,
        )
        ap_full = ap_at_k(
            score_shots(full, encoded, held_out, features=shot_feats), k=None
        )
        ap_loo = ap_at_k(
            score_shots(loo, encoded, held_out, features=shot_feats), k=None
        )
        pairs[c] = {"full": ap_full, "loo": ap_loo}
    return EvalReport(
        task="nonaction_loo",
        per_class_ap={c: pairs[c]["loo"] for c in pairs},
        mean_ap=None,
        config={} if config is None else asdict(config),
        loo_pairs=pairs,
    )


# ---------------------------------------------------------------------------
# plots (SVG, deterministic output)
# ---------------------------------------------------------------------------


def _figure():
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "segment-purify"
    import matplotlib.pyplot as plt

    return plt


def plot_sweep(points, path) -> None:
    """Mean +- std of mAP against the pruning probability."""
    plt = _figure()
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ps = [pt.p for pt in points]
    means = [pt.map_mean for pt in points]
    stds = [pt.map_std for pt in points]
    ax.errorbar(ps, means, yerr=stds, marker="o", capsize=3)
    ax.set_xlabel("non-action shot removal probability")
    ax.set_ylabel("mAP")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_pr_curves(curves: dict, path) -> None:
    """One precision-recall curve per class."""
    plt = _figure()
    fig, ax = plt.subplots(figsize=(5, 4))
    for name in sorted(curves):
        curve = curves[name]
        ax.plot(curve.recall, curve.precision, label=f"{name} ({curve.ap:.3f})")
    ax.set_xlabel("recall")
    ax.set_ylabel("precision")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1.05)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
