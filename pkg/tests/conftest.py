import numpy as np
import pytest

from segment_purify import SyntheticSpec, encode_manifest, fit_channel_models, generate


@pytest.fixture(scope="session")
def small_ds():
    """Small planted-signal dataset plus fitted models and encodings."""
    spec = SyntheticSpec(
        n_classes=3,
        n_videos=36,
        shots_per_video=(3, 6),
        frames_per_shot=(10, 20),
        descriptors_per_frame=6,
        action_strength=1.5,
        seed=5,
    )
    manifest, streams = generate(spec)
    models = {
        "traj": fit_channel_models(
            manifest, "traj", dim=4, k=2, sample=20_000, seed=0, streams=streams
        )
    }
    encoded = encode_manifest(manifest, models, streams=streams)
    return {
        "spec": spec,
        "manifest": manifest,
        "streams": streams,
        "models": models,
        "encoded": encoded,
    }


@pytest.fixture(scope="session")
def dense_ds():
    """Dataset with two dense channels next to the local one."""
    spec = SyntheticSpec(
        n_classes=2,
        n_videos=10,
        shots_per_video=(3, 5),
        frames_per_shot=(10, 20),
        descriptors_per_frame=5,
        action_strength=1.5,
        dense_channels=2,
        dense_dim=6,
        dense_stride=5,
        seed=9,
    )
    manifest, streams = generate(spec)
    models = {
        "traj": fit_channel_models(
            manifest, "traj", dim=4, k=2, sample=10_000, seed=0, streams=streams
        )
    }
    encoded = encode_manifest(manifest, models, streams=streams)
    return {
        "spec": spec,
        "manifest": manifest,
        "streams": streams,
        "models": models,
        "encoded": encoded,
    }


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
