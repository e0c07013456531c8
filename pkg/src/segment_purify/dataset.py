"""Video/shot data model, annotator vote resolution, and manifest I/O.

A dataset is described by a JSON manifest with a top-level ``videos`` array.
Each video entry carries ``id``, ``label``, ``n_frames``, ``shots`` (array of
``{start, end, votes, override?}``) and ``channels`` (map of channel name to
a descriptor-file path relative to the manifest). An optional top-level
``channel_kinds`` map declares each channel as ``"local"`` (sets of local
descriptors per frame, Fisher-Vector encoded) or ``"dense"`` (one vector per
sampled frame, mean-pooled); channels default to ``"local"``.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path


class ShotLabel(Enum):
    ACTION = "action"
    NON_ACTION = "non-action"
    UNRESOLVED = "unresolved"


class ManifestError(ValueError):
    """A manifest failed to parse or violates a structural invariant."""


def resolve_votes(votes) -> ShotLabel:
    """Resolve up to three binary annotator votes by strict majority.

    A vote of 1 marks the shot as non-action, 0 as action. Returns
    UNRESOLVED on a tie or when no votes were cast; those shots are meant
    to be fixed up manually via the manifest ``override`` field.
    """
    votes = list(votes)
    if len(votes) > 3:
        raise ValueError(f"expected at most 3 votes, got {len(votes)}")
    if any(v not in (0, 1) for v in votes):
        raise ValueError(f"votes must be 0 or 1, got {votes!r}")
    n_non = sum(votes)
    n_act = len(votes) - n_non
    if n_non > n_act:
        return ShotLabel.NON_ACTION
    if n_act > n_non:
        return ShotLabel.ACTION
    return ShotLabel.UNRESOLVED


@dataclass(frozen=True)
class ShotRecord:
    """One annotated shot: an inclusive 1-based frame range within a video."""

    start: int
    end: int
    votes: tuple = ()
    override: ShotLabel | None = None

    @property
    def resolved_label(self) -> ShotLabel:
        if self.override is not None:
            return self.override
        return resolve_votes(self.votes)

    @property
    def n_frames(self) -> int:
        return self.end - self.start + 1


@dataclass(frozen=True)
class VideoRecord:
    """A video clip with its shot partition and descriptor channel files."""

    video_id: str
    action_label: str
    n_frames: int
    shots: tuple
    channels: dict = field(default_factory=dict)

    def shot_label(self, i: int) -> ShotLabel:
        return self.shots[i].resolved_label

    @property
    def n_shots(self) -> int:
        return len(self.shots)


@dataclass(frozen=True)
class DatasetManifest:
    """All videos of a dataset plus channel kind declarations."""

    videos: tuple
    channel_kinds: dict = field(default_factory=dict)
    root: Path | None = None

    def __post_init__(self):
        object.__setattr__(
            self, "_by_id", {v.video_id: v for v in self.videos}
        )

    def video(self, video_id: str) -> VideoRecord:
        return self._by_id[video_id]

    @property
    def classes(self) -> list:
        return sorted({v.action_label for v in self.videos})

    def channel_kind(self, name: str) -> str:
        return self.channel_kinds.get(name, "local")

    def channel_path(self, video: VideoRecord, channel: str) -> Path:
        rel = video.channels[channel]
        return rel if self.root is None else self.root / rel

    @property
    def n_shots(self) -> int:
        return sum(v.n_shots for v in self.videos)

    def count_shots(self, label: ShotLabel) -> int:
        return sum(
            1 for v in self.videos for s in v.shots if s.resolved_label == label
        )


def validate_shot_partition(video_id: str, n_frames: int, shots) -> None:
    """Check that shots are contiguous, non-overlapping and cover [1, n_frames]."""
    if n_frames < 1:
        raise ManifestError(f"video {video_id}: n_frames must be >= 1")
    if not shots:
        raise ManifestError(f"video {video_id}: no shots")
    pos = 1
    for i, shot in enumerate(shots):
        if shot.start > shot.end:
            raise ManifestError(
                f"video {video_id}: shot {i} has start {shot.start} > end {shot.end}"
            )
        if shot.start > pos:
            raise ManifestError(f"video {video_id}: gap at frame {pos}")
        if shot.start < pos:
            raise ManifestError(
                f"video {video_id}: overlap at frame {shot.start} (shot {i})"
            )
        if shot.end > n_frames:
            raise ManifestError(
                f"video {video_id}: shot {i} ends at {shot.end} past n_frames {n_frames}"
            )
        pos = shot.end + 1
    if pos != n_frames + 1:
        raise ManifestError(f"video {video_id}: gap at frame {pos}")


def _parse_override(raw, video_id, i):
    if raw is None:
        return None
    try:
        label = ShotLabel(raw)
    except ValueError:
        raise ManifestError(
            f"video {video_id}: shot {i} has unknown override {raw!r}"
        ) from None
    if label is ShotLabel.UNRESOLVED:
        raise ManifestError(
            f"video {video_id}: shot {i} override cannot be 'unresolved'"
        )
    return label


def manifest_from_dict(data, root=None, check_files=True) -> DatasetManifest:
    """Build and validate a DatasetManifest from parsed JSON data.

    Videos in which every shot resolves to non-action carry no action
    occurrence at all; they are dropped with a warning.
    """
    if not isinstance(data, dict) or "videos" not in data:
        raise ManifestError("manifest must be an object with a 'videos' array")
    kinds = data.get("channel_kinds", {})
    for name, kind in kinds.items():
        if kind not in ("local", "dense"):
            raise ManifestError(
                f"channel {name!r}: kind must be 'local' or 'dense', got {kind!r}"
            )
    videos = []
    seen = set()
    for entry in data["videos"]:
        try:
            vid = entry["id"]
            label = entry["label"]
            n_frames = int(entry["n_frames"])
            raw_shots = entry["shots"]
            channels = dict(entry.get("channels", {}))
        except (KeyError, TypeError) as exc:
            raise ManifestError(f"malformed video entry: {exc}") from None
        if vid in seen:
            raise ManifestError(f"duplicate video id {vid!r}")
        seen.add(vid)
        shots = []
        for i, s in enumerate(raw_shots):
            try:
                shot = ShotRecord(
                    start=int(s["start"]),
                    end=int(s["end"]),
                    votes=tuple(s.get("votes", ())),
                    override=_parse_override(s.get("override"), vid, i),
                )
            except KeyError as exc:
                raise ManifestError(
                    f"video {vid}: shot {i} missing field {exc}"
                ) from None
            try:
                shot.resolved_label
            except ValueError as exc:
                raise ManifestError(f"video {vid}: shot {i}: {exc}") from None
            shots.append(shot)
        validate_shot_partition(vid, n_frames, shots)
        video = VideoRecord(
            video_id=vid,
            action_label=label,
            n_frames=n_frames,
            shots=tuple(shots),
            channels=channels,
        )
        if check_files and root is not None:
            for name, rel in channels.items():
                if not (Path(root) / rel).exists():
                    raise ManifestError(
                        f"video {vid}: dangling descriptor reference "
                        f"{rel!r} for channel {name!r}"
                    )
        labels = [s.resolved_label for s in shots]
        if all(l == ShotLabel.NON_ACTION for l in labels):
            warnings.warn(
                f"video {vid}: no action shots, dropping from manifest",
                stacklevel=2,
            )
            continue
        videos.append(video)
    return DatasetManifest(
        videos=tuple(videos),
        channel_kinds=dict(kinds),
        root=None if root is None else Path(root),
    )


def load_manifest(path, check_files=True) -> DatasetManifest:
    """Load and validate a JSON dataset manifest from disk."""
    path = Path(path)
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: parse error: {exc}") from None
    return manifest_from_dict(data, root=path.parent, check_files=check_files)


def manifest_to_dict(manifest: DatasetManifest) -> dict:
    """Inverse of manifest_from_dict, for writing manifests back out."""
    videos = []
    for v in manifest.videos:
        shots = []
        for s in v.shots:
            entry = {"start": s.start, "end": s.end, "votes": list(s.votes)}
            if s.override is not None:
                entry["override"] = s.override.value
            shots.append(entry)
        videos.append(
            {
                "id": v.video_id,
                "label": v.action_label,
                "n_frames": v.n_frames,
                "shots": shots,
                "channels": dict(v.channels),
            }
        )
    return {"channel_kinds": dict(manifest.channel_kinds), "videos": videos}


def save_manifest(manifest: DatasetManifest, path) -> None:
    with open(path, "w") as fh:
        json.dump(manifest_to_dict(manifest), fh, indent=2, sort_keys=True)
        fh.write("\n")
