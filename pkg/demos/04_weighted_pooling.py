"""Softmax-weighted segment pooling: between averaging and max-pooling.

A video is cut into 25-frame windows, each window gets a non-action score
from the shot classifier, and the video feature is the weighted sum of
window features with weights exp(-alpha * score) normalized to one.
alpha = 0 averages everything; large alpha keeps only the most
action-like window. The sweet spot beats both extremes on recognition.
"""

from segment_purify import (
    ExperimentConfig,
    SyntheticSpec,
    encode_manifest,
    fit_channel_models,
    generate,
    run_experiment,
    split_videos,
    train_nonaction,
    video_feature,
)

spec = SyntheticSpec(
    n_classes=4,
    n_videos=160,
    shots_per_video=(5, 9),
    descriptors_per_frame=4,
    action_strength=0.9,
    shared_fraction=0.9,
    seed=21,
)
manifest, streams = generate(spec)
models = {"traj": fit_channel_models(manifest, "traj", dim=4, k=3,
                                     sample=40_000, seed=0, streams=streams)}
encoded = encode_manifest(manifest, models, streams=streams)
train_ids, test_ids = split_videos(manifest)
nonaction = train_nonaction(encoded, train_ids)

# watch the weights move as alpha grows
ev = encoded[test_ids[0]]
print(f"video {ev.video.video_id}: per-segment weights")
for alpha in (0.0, 1.0, 4.0, 1e6):
    pooled = video_feature(ev, nonaction, alpha=alpha)
    w = ", ".join(f"{x:.3f}" for x in pooled.weights)
    print(f"  alpha {alpha:>9.1f}: [{w}]")

# recognition quality across the alpha grid, generic weighting
print("\ntest mAP by alpha (pooled features, generic non-action weighting):")
for alpha in (0.0, 0.5, 1.0, 2.0, 4.0, 8.0):
    report = run_experiment(
        manifest,
        encoded,
        ExperimentConfig(feature="pooled", weighting="generic", alpha=alpha),
    )
    print(f"  alpha {alpha:>4.1f}: mAP {report.mean_ap:.4f}")

baseline = run_experiment(
    manifest, encoded, ExperimentConfig(feature="whole", weighting="none")
)
tuned = run_experiment(
    manifest,
    encoded,
    ExperimentConfig(feature="pooled", weighting="generic", tune_alpha=True),
)
print(f"\nwhole-video baseline: {baseline.mean_ap:.4f}")
print(f"tuned pooling (alpha={tuned.tuned_alpha}): {tuned.mean_ap:.4f}")
