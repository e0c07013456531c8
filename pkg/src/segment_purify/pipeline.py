"""Shared plumbing: channel model fitting, per-video encoding, splits.

An EncodedVideo holds everything downstream stages need: per-frame
unnormalized Fisher Vectors for each local channel and the raw sampled
vectors for each dense channel. Region features concatenate, in sorted
channel order, the power+L2-normalized FV of the frames in the region and
the L2-normalized mean of the dense vectors in the region.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import DatasetManifest, VideoRecord
from .features_io import read_stream
from .fisher import frame_fisher_vectors, mean_pool, power_l2_normalize
from .gmm import GmmModel, fit_gmm
from .pca import PcaModel, fit_pca


@dataclass
class ChannelModels:
    """PCA + GMM pair for one local channel."""

    pca: PcaModel
    gmm: GmmModel
    whiten: bool = False

    def project(self, descriptors) -> np.ndarray:
        return self.pca.transform(descriptors, whiten=self.whiten)


@dataclass
class EncodedVideo:
    """Per-frame encodings of one video, ready for region aggregation."""

    video: VideoRecord
    fv: dict  # channel -> (n_frames, 2dk) unnormalized per-frame FVs
    fv_counts: dict  # channel -> (n_frames,) descriptor counts
    dense: dict  # channel -> (indices (m,), vectors (m, Dc))

    @property
    def n_frames(self) -> int:
        return self.video.n_frames

    @property
    def fv_channels(self) -> list:
        return sorted(self.fv)

    @property
    def dense_channels(self) -> list:
        return sorted(self.dense)

    def feature_length(self, include_dense: bool = True) -> int:
        total = sum(self.fv[ch].shape[1] for ch in self.fv_channels)
        if include_dense:
            total += sum(self.dense[ch][1].shape[1] for ch in self.dense_channels)
        return total

    def full_mask(self) -> np.ndarray:
        return np.ones(self.n_frames, dtype=bool)

    def range_mask(self, start: int, end: int) -> np.ndarray:
        mask = np.zeros(self.n_frames, dtype=bool)
        mask[start - 1 : end] = True
        return mask


def region_feature(ev: EncodedVideo, mask, include_dense: bool = True) -> np.ndarray:
    """Normalized feature for an arbitrary frame set of an encoded video."""
    parts = []
    for ch in ev.fv_channels:
        parts.append(power_l2_normalize(ev.fv[ch][mask].sum(axis=0)))
    if include_dense:
        for ch in ev.dense_channels:
            idx, vec = ev.dense[ch]
            parts.append(mean_pool(idx, vec, mask))
    return np.concatenate(parts)


def encode_video(
    video: VideoRecord, streams: dict, channel_models: dict
) -> EncodedVideo:
    """Encode one video's streams into per-frame FVs and dense arrays."""
    fv = {}
    fv_counts = {}
    dense = {}
    for name in sorted(streams):
        stream = streams[name]
        stream.validate(video.n_frames, name)
        if stream.kind == "dense":
            dense[name] = (
                stream.frame_indices.copy(),
                stream.vectors.astype(np.float64),
            )
            continue
        if name not in channel_models:
            raise ValueError(f"no fitted models for local channel {name!r}")
        cm = channel_models[name]
        Z = cm.project(stream.vectors)
        values, counts = frame_fisher_vectors(
            stream.frame_indices, Z, cm.gmm, video.n_frames
        )
        fv[name] = values
        fv_counts[name] = counts
    return EncodedVideo(video=video, fv=fv, fv_counts=fv_counts, dense=dense)


def load_streams(manifest: DatasetManifest, video: VideoRecord) -> dict:
    """Read all declared descriptor files for one video."""
    return {
        name: read_stream(
            manifest.channel_path(video, name), manifest.channel_kind(name)
        )
        for name in sorted(video.channels)
    }


def encode_manifest(
    manifest: DatasetManifest,
    channel_models: dict,
    streams=None,
    videos=None,
) -> dict:
    """Encode every video; returns video_id -> EncodedVideo.

    streams may be the in-memory dict produced by synthetic.generate; when
    absent, descriptor files are read from the manifest root.
    """
    encoded = {}
    for video in videos if videos is not None else manifest.videos:
        vid_streams = (
            streams[video.video_id]
            if streams is not None
            else load_streams(manifest, video)
        )
        encoded[video.video_id] = encode_video(video, vid_streams, channel_models)
    return encoded


def sample_channel_descriptors(
    manifest: DatasetManifest,
    channel: str,
    sample: int = 1_000_000,
    seed: int = 0,
    streams=None,
    videos=None,
) -> np.ndarray:
    """Pool descriptors of one local channel, subsampled to at most `sample`."""
    blocks = []
    for video in videos if videos is not None else manifest.videos:
        if channel not in video.channels:
            continue
        if streams is not None:
            stream = streams[video.video_id][channel]
        else:
            stream = read_stream(
                manifest.channel_path(video, channel),
                manifest.channel_kind(channel),
            )
        blocks.append(stream.vectors)
    if not blocks:
        raise ValueError(f"channel {channel!r} appears in no video")
    X = np.concatenate(blocks).astype(np.float64)
    if len(X) > sample:
        rng = np.random.default_rng(seed)
        X = X[rng.choice(len(X), size=sample, replace=False)]
    return X


def fit_channel_models(
    manifest: DatasetManifest,
    channel: str,
    dim: int | None = None,
    k: int = 256,
    sample: int = 1_000_000,
    seed: int = 0,
    whiten: bool = False,
    streams=None,
    videos=None,
) -> ChannelModels:
    """Fit the PCA + GMM pair for one local channel from pooled descriptors."""
    X = sample_channel_descriptors(
        manifest, channel, sample=sample, seed=seed, streams=streams, videos=videos
    )
    pca = fit_pca(X, dim=dim)
    gmm = fit_gmm(pca.transform(X, whiten=whiten), k=k, seed=seed)
    return ChannelModels(pca=pca, gmm=gmm, whiten=whiten)


def save_encoded(encoded: dict, out_dir) -> None:
    """Persist encoded videos as .npy arrays under out_dir/<video_id>/."""
    out_dir = Path(out_dir)
    for vid in sorted(encoded):
        ev = encoded[vid]
        vdir = out_dir / vid
        vdir.mkdir(parents=True, exist_ok=True)
        for ch in ev.fv_channels:
            np.save(vdir / f"{ch}.fv.npy", ev.fv[ch])
            np.save(vdir / f"{ch}.count.npy", ev.fv_counts[ch])
        for ch in ev.dense_channels:
            idx, vec = ev.dense[ch]
            np.save(vdir / f"{ch}.didx.npy", idx)
            np.save(vdir / f"{ch}.dvec.npy", vec)


def load_encoded(manifest: DatasetManifest, encoded_dir, videos=None) -> dict:
    """Load encoded videos written by save_encoded; returns video_id -> EncodedVideo."""
    encoded_dir = Path(encoded_dir)
    out = {}
    for video in videos if videos is not None else manifest.videos:
        vdir = encoded_dir / video.video_id
        if not vdir.is_dir():
            raise FileNotFoundError(f"no encoded data for video {video.video_id}")
        fv, fv_counts, dense = {}, {}, {}
        for name in sorted(video.channels):
            if manifest.channel_kind(name) == "dense":
                dense[name] = (
                    np.load(vdir / f"{name}.didx.npy"),
                    np.load(vdir / f"{name}.dvec.npy"),
                )
            else:
                fv[name] = np.load(vdir / f"{name}.fv.npy")
                fv_counts[name] = np.load(vdir / f"{name}.count.npy")
        out[video.video_id] = EncodedVideo(
            video=video, fv=fv, fv_counts=fv_counts, dense=dense
        )
    return out


def split_videos(manifest: DatasetManifest, train_fraction: float = 0.5):
    """Deterministic stratified split; returns (train_ids, test_ids).

    Within each class, videos alternate between the splits in manifest
    order so both splits see every class.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    counters = {}
    train, test = [], []
    for video in manifest.videos:
        i = counters.get(video.action_label, 0)
        counters[video.action_label] = i + 1
        took = int((i + 1) * train_fraction) - int(i * train_fraction)
        (train if took else test).append(video.video_id)
    return train, test
