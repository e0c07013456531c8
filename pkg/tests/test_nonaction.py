from types import SimpleNamespace

import numpy as np
import pytest

from segment_purify import (
    ShotLabel,
    ShotRecord,
    VideoRecord,
    ap_at_k,
    average_precision,
    build_training_set,
    score_shots,
    shot_feature,
    train_nonaction,
)
from segment_purify.nonaction import (
    ShotScore,
    shot_feature_length,
    shot_is_positive,
)
from segment_purify.pipeline import EncodedVideo, split_videos

from published_counts import (
    TEST_SHOTS,
    TRAIN_SHOTS,
    build_published_manifest,
    split_with_exact_train_shots,
)


def make_encoded(fv_rows, shots, label="run", vid="v0", counts=None):
    """EncodedVideo stub with one local channel of given per-frame FVs."""
    fv_rows = np.asarray(fv_rows, dtype=np.float64)
    n = fv_rows.shape[0]
    video = VideoRecord(
        video_id=vid,
        action_label=label,
        n_frames=n,
        shots=tuple(shots),
        channels={"traj": "x"},
    )
    return EncodedVideo(
        video=video,
        fv={"traj": fv_rows},
        fv_counts={"traj": counts if counts is not None else np.ones(n, int)},
        dense={},
    )


class TestShotFeature:
    def test_whole_video_shot(self, rng):
        rows = rng.normal(size=(10, 6))
        ev = make_encoded(rows, [ShotRecord(1, 10, (0, 0, 0))])
        feat = shot_feature(ev, ev.video.shots[0])
        assert np.allclose(feat.f_in, feat.f_all)
        assert np.all(feat.f_out == 0.0)
        assert len(feat.full) == 3 * 6

    def test_identical_shots_same_feature(self, rng):
        block = rng.normal(size=(5, 4))
        rows = np.concatenate([block, block])
        shots = [ShotRecord(1, 5, (0, 0, 0)), ShotRecord(6, 10, (1, 1, 1))]
        ev = make_encoded(rows, shots)
        f1 = shot_feature(ev, shots[0])
        f2 = shot_feature(ev, shots[1])
        assert np.allclose(f1.f_in, f2.f_in, atol=1e-12)

    def test_out_of_range_shot(self, rng):
        ev = make_encoded(rng.normal(size=(10, 4)), [ShotRecord(1, 10, (0,))])
        with pytest.raises(ValueError, match="outside video range"):
            shot_feature(ev, ShotRecord(5, 12, (0,)))

    def test_paper_scale_feature_length(self):
        # one 109,056-dim FV channel plus two 4096-dim dense channels
        assert shot_feature_length([2 * 213 * 256], [4096, 4096]) == 351_744

    def test_complement_identity_unnormalized(self, small_ds):
        # in-frames plus out-frames sum exactly to all-frames statistics
        ev = next(iter(small_ds["encoded"].values()))
        shot = ev.video.shots[0]
        rows = ev.fv["traj"]
        inside = ev.range_mask(shot.start, shot.end)
        lhs = rows[inside].sum(axis=0) + rows[~inside].sum(axis=0)
        rhs = rows.sum(axis=0)
        assert np.allclose(lhs, rhs, atol=1e-9, rtol=0)

    def test_dense_channels_in_feature(self, dense_ds):
        ev = next(iter(dense_ds["encoded"].values()))
        feat = shot_feature(ev, ev.video.shots[0])
        fv_dim = ev.fv["traj"].shape[1]
        dense_dims = sum(ev.dense[ch][1].shape[1] for ch in ev.dense_channels)
        assert len(feat.full) == shot_feature_length([fv_dim], [dense_dims])


class TestTrainingSetModes:
    def _toy(self):
        # two classes; video of class "a" with one action and one
        # non-action shot, video of class "b" with one action shot
        va = VideoRecord(
            "va", "a", 10,
            (ShotRecord(1, 5, (0, 0, 0)), ShotRecord(6, 10, (1, 1, 1))),
            {},
        )
        vb = VideoRecord("vb", "b", 5, (ShotRecord(1, 5, (0, 0, 0)),), {})
        encoded = {
            "va": SimpleNamespace(video=va),
            "vb": SimpleNamespace(video=vb),
        }
        features = {"va": np.zeros((2, 3)), "vb": np.ones((1, 3))}
        return encoded, features

    def test_generic_labels(self):
        encoded, features = self._toy()
        X, y, index = build_training_set(
            encoded, ["va", "vb"], mode="generic", features=features
        )
        assert X.shape == (3, 3)
        assert y.tolist() == [-1.0, 1.0, -1.0]
        assert index == [("va", 0), ("va", 1), ("vb", 0)]

    def test_specific_other_action_is_nonaction(self):
        encoded, features = self._toy()
        _, y, index = build_training_set(
            encoded, ["va", "vb"], mode="specific", action="a", features=features
        )
        # vb's action shot lacks action "a", so it counts as non-action
        assert y[index.index(("vb", 0))] == 1.0
        assert y[index.index(("va", 0))] == -1.0

    def test_leave_one_out_excludes_class(self):
        encoded, features = self._toy()
        _, y, index = build_training_set(
            encoded, ["va", "vb"], mode="leave_one_out", action="b", features=features
        )
        assert all(vid != "vb" for vid, _ in index)

    def test_unknown_class(self):
        encoded, features = self._toy()
        with pytest.raises(ValueError, match="unknown action class"):
            build_training_set(
                encoded, ["va"], mode="specific", action="zzz", features=features
            )

    def test_unresolved_shot_rejected(self):
        va = VideoRecord(
            "va", "a", 10,
            (ShotRecord(1, 5, (0, 0, 0)), ShotRecord(6, 10, (1, 0))),
            {},
        )
        encoded = {"va": SimpleNamespace(video=va)}
        with pytest.raises(ValueError, match="unresolved"):
            build_training_set(
                encoded, ["va"], features={"va": np.zeros((2, 3))}
            )

    def test_specific_rule_on_shot(self):
        video = SimpleNamespace(video_id="v", action_label="a")
        action_shot = ShotRecord(1, 5, (0, 0, 0))
        nonact_shot = ShotRecord(6, 10, (1, 1, 1))
        assert not shot_is_positive(video, action_shot, "specific", "a")
        assert shot_is_positive(video, action_shot, "specific", "b")
        assert shot_is_positive(video, nonact_shot, "specific", "a")

    def test_train_split_shot_count_matches_published(self):
        manifest = build_published_manifest()
        train_ids, test_ids = split_with_exact_train_shots(manifest)
        encoded = {
            v.video_id: SimpleNamespace(video=v) for v in manifest.videos
        }
        features = {
            v.video_id: np.zeros((v.n_shots, 2)) for v in manifest.videos
        }
        X, y, _ = build_training_set(
            encoded, train_ids, mode="generic", features=features
        )
        assert X.shape[0] == TRAIN_SHOTS
        n_test = sum(manifest.video(v).n_shots for v in test_ids)
        assert n_test == TEST_SHOTS


class TestScoring:
    def test_zero_weight_classifier_prior_baseline(self, rng):
        # equal scores rank in input order; AP hovers at the positive prior
        from segment_purify.models import LinearModel

        n = 5000
        labels = rng.random(n) < 0.6
        scores = [
            ShotScore("v", i, 0.5, ShotLabel.NON_ACTION if l else ShotLabel.ACTION)
            for i, l in enumerate(labels)
        ]
        ap = ap_at_k(scores, None)
        assert abs(ap - 0.6) < 0.02

    def test_planted_signal_high_ap(self, small_ds):
        manifest, encoded = small_ds["manifest"], small_ds["encoded"]
        train, test = split_videos(manifest)
        model = train_nonaction(encoded, train)
        scored = score_shots(model, encoded, test)
        assert ap_at_k(scored, None) >= 0.95

    def test_dimension_mismatch(self, small_ds):
        from segment_purify.models import LinearModel

        model = LinearModel(w=np.zeros(7), b=0.0)
        with pytest.raises(ValueError, match="does not match"):
            score_shots(model, small_ds["encoded"], [small_ds["manifest"].videos[0].video_id])


class TestApAtK:
    def _scores(self, triples):
        return [
            ShotScore(vid, i, s, ShotLabel.NON_ACTION if pos else ShotLabel.ACTION)
            for i, (vid, s, pos) in enumerate(triples)
        ]

    def test_top1_hand_case(self):
        scores = self._scores(
            [("v", 3.0, True), ("v", 2.0, False), ("v", 1.0, False)]
        )
        assert ap_at_k(scores, k=1) == 1.0

    def test_infinite_k_equals_plain_ap(self):
        scores = self._scores(
            [
                ("a", 0.9, True),
                ("a", 0.8, False),
                ("b", 0.7, True),
                ("b", 0.6, True),
            ]
        )
        plain = average_precision(
            np.array([s.score for s in scores]),
            np.array([s.label is ShotLabel.NON_ACTION for s in scores]),
        ).ap
        assert ap_at_k(scores, None) == plain
        assert ap_at_k(scores, np.inf) == plain
        assert ap_at_k(scores, 10) == plain

    def test_k_below_one_rejected(self):
        scores = self._scores([("v", 1.0, True)])
        with pytest.raises(ValueError):
            ap_at_k(scores, 0)

    def test_topk_improves_on_planted_data(self, small_ds):
        manifest, encoded = small_ds["manifest"], small_ds["encoded"]
        train, test = split_videos(manifest)
        model = train_nonaction(encoded, train)
        scored = score_shots(model, encoded, test)
        assert ap_at_k(scored, 1) >= ap_at_k(scored, None)
