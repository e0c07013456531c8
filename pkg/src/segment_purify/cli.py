"""Command-line front end: one subcommand per pipeline stage.

Stages communicate through files only: a manifest plus descriptor files
(synth), model containers (fit-pca, fit-gmm, train-nonaction,
train-action), per-video encoded arrays (encode), per-video feature
arrays (pool, darwin), and CSV/JSON reports (score-shots, evaluate,
simulate-pruning). Every stage is deterministic given its inputs and
--seed; re-running one rewrites byte-identical artifacts.
"""

from __future__ import annotations

import csv
import hashlib
import json
import sys
import traceback
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click
import numpy as np

from . import evaluation, model_io, nonaction, pipeline, pooling, synthetic
from .darwin import darwin_video_feature
from .dataset import ManifestError, load_manifest
from .evaluation import ExperimentConfig
from .gmm import fit_gmm
from .models import fit_lssvm
from .pca import fit_pca
from .pipeline import ChannelModels


class StageError(click.ClickException):
    """Validation failure of a pipeline stage (exit code 1)."""


def _require(path: Path, hint: str) -> Path:
    if not Path(path).exists():
        raise StageError(f"missing model or input {path}: {hint}")
    return Path(path)


def _local_channels(manifest):
    names = sorted({ch for v in manifest.videos for ch in v.channels})
    return [ch for ch in names if manifest.channel_kind(ch) == "local"]


def _select_videos(manifest, split):
    if split == "all":
        return list(manifest.videos)
    train, test = pipeline.split_videos(manifest)
    wanted = set(train if split == "train" else test)
    return [v for v in manifest.videos if v.video_id in wanted]


def _channel_models(models_dir, channels, whiten):
    out = {}
    for ch in channels:
        pca_path = _require(
            Path(models_dir) / f"pca_{ch}.spmd", "run fit-pca first"
        )
        gmm_path = _require(
            Path(models_dir) / f"gmm_{ch}.spmd", "run fit-gmm first"
        )
        out[ch] = ChannelModels(
            pca=model_io.load_model(pca_path),
            gmm=model_io.load_model(gmm_path),
            whiten=whiten,
        )
    return out


def _write_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerows(rows)


def _hash_inputs(paths, params) -> str:
    digest = hashlib.sha256()
    for p in sorted(str(p) for p in paths):
        digest.update(p.encode())
        digest.update(Path(p).read_bytes())
    digest.update(json.dumps(params, sort_keys=True).encode())
    return digest.hexdigest()


def _parse_grid(text):
    if ":" in text:
        start, step, end = (float(x) for x in text.split(":"))
        if step <= 0:
            raise StageError("grid step must be positive")
        values = []
        v = start
        while v <= end + 1e-12:
            values.append(round(v, 12))
            v += step
        return values
    return [float(x) for x in text.split(",")]


def _parse_mode(text):
    if text == "generic":
        return "generic", None
    for prefix, mode in (("specific=", "specific"), ("loo=", "leave_one_out")):
        if text.startswith(prefix):
            return mode, text[len(prefix) :]
    raise StageError(
        f"bad mode {text!r}: expected generic, specific=<class>, or loo=<class>"
    )


def _mode_tag(mode, action):
    if mode == "generic":
        return "generic"
    short = "specific" if mode == "specific" else "loo"
    return f"{short}_{action}"


# config-file keys use the flag names; map them onto parameter names
_CONFIG_ALIASES = {
    "manifest": "manifest_path",
    "models": "models_dir",
    "encoded": "encoded_dir",
    "features": "features_dir",
    "lambda": "lam",
    "tune": "tune_gamma",
    "p-grid": "p_grid",
    "tune-alpha": "tune_alpha",
    "fuse-dense": "fuse_dense",
    "per-second": "per_second",
    "no-retrain": "no_retrain",
}


@click.group(name="segment-purify")
@click.option(
    "--config",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="JSON file of default option values; explicit flags override it.",
)
@click.pass_context
def cli(ctx, config):
    """Pipeline stages for non-action classification and recognition."""
    if config:
        with open(config) as fh:
            raw = json.load(fh)
        values = {}
        for key, val in raw.items():
            values[key] = val
            if key in _CONFIG_ALIASES:
                values[_CONFIG_ALIASES[key]] = val
            if key == "out":
                values["out_dir"] = val
                values["out_path"] = val
        ctx.default_map = {name: values for name in cli.commands}


@cli.command()
@click.option("--spec", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(file_okay=False))
def synth(spec, out):
    """Generate a synthetic dataset: manifest plus descriptor files."""
    sp = synthetic.load_spec(spec)
    path = synthetic.generate_to_dir(sp, out)
    manifest = load_manifest(path)
    click.echo(
        f"wrote {path} ({len(manifest.videos)} videos, {manifest.n_shots} shots)"
    )


@cli.command(name="fit-pca")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--models", "models_dir", required=True, type=click.Path(file_okay=False))
@click.option("--channel", default=None, help="Local channel name; default: all.")
@click.option("--dim", default=None, type=int, help="Target dim; default D/2.")
@click.option("--sample", default=1_000_000, type=int, show_default=True)
@click.option("--seed", default=0, type=int, show_default=True)
@click.option("--split", default="train", type=click.Choice(["train", "test", "all"]))
def fit_pca_cmd(manifest_path, models_dir, channel, dim, sample, seed, split):
    """Fit the PCA projection of one or all local channels."""
    manifest = load_manifest(manifest_path)
    videos = _select_videos(manifest, split)
    Path(models_dir).mkdir(parents=True, exist_ok=True)
    channels = [channel] if channel else _local_channels(manifest)
    for ch in channels:
        X = pipeline.sample_channel_descriptors(
            manifest, ch, sample=sample, seed=seed, videos=videos
        )
        model = fit_pca(X, dim=dim)
        out = Path(models_dir) / f"pca_{ch}.spmd"
        model_io.save_model(out, model)
        click.echo(f"{out}: {model.input_dim} -> {model.output_dim} dims")


@cli.command(name="fit-gmm")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--models", "models_dir", required=True, type=click.Path(file_okay=False))
@click.option("--channel", default=None)
@click.option("--k", default=256, type=int, show_default=True)
@click.option("--sample", default=1_000_000, type=int, show_default=True)
@click.option("--seed", default=0, type=int, show_default=True)
@click.option("--whiten", is_flag=True, help="Whiten after PCA projection.")
@click.option("--split", default="train", type=click.Choice(["train", "test", "all"]))
def fit_gmm_cmd(manifest_path, models_dir, channel, k, sample, seed, whiten, split):
    """Fit the descriptor GMM of one or all local channels (needs fit-pca)."""
    manifest = load_manifest(manifest_path)
    videos = _select_videos(manifest, split)
    channels = [channel] if channel else _local_channels(manifest)
    for ch in channels:
        pca_path = _require(
            Path(models_dir) / f"pca_{ch}.spmd", "run fit-pca first"
        )
        pca = model_io.load_model(pca_path)
        X = pipeline.sample_channel_descriptors(
            manifest, ch, sample=sample, seed=seed, videos=videos
        )
        gmm = fit_gmm(pca.transform(X, whiten=whiten), k=k, seed=seed)
        out = Path(models_dir) / f"gmm_{ch}.spmd"
        model_io.save_model(out, gmm)
        click.echo(
            f"{out}: k={gmm.k}, {len(gmm.fit_log_likelihoods)} EM iterations"
        )


@cli.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--models", "models_dir", required=True, type=click.Path(file_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--whiten", is_flag=True)
@click.option("--jobs", default=1, type=int, show_default=True)
@click.option("--force", is_flag=True, help="Re-encode even on a cache hit.")
def encode(manifest_path, models_dir, out_dir, whiten, jobs, force):
    """Encode per-frame Fisher Vectors for every video (cached by content)."""
    manifest = load_manifest(manifest_path)
    channels = _local_channels(manifest)
    models = _channel_models(models_dir, channels, whiten)

    model_files = [Path(models_dir) / f"pca_{ch}.spmd" for ch in channels]
    model_files += [Path(models_dir) / f"gmm_{ch}.spmd" for ch in channels]
    key = _hash_inputs(
        [manifest_path, *model_files], {"whiten": whiten, "stage": "encode"}
    )
    out_dir = Path(out_dir)
    stamp = out_dir / ".stage"
    if not force and stamp.exists() and stamp.read_text().strip() == key:
        click.echo(f"{out_dir}: up to date, skipping (use --force to redo)")
        return
    out_dir.mkdir(parents=True, exist_ok=True)

    def work(video):
        streams = pipeline.load_streams(manifest, video)
        return video.video_id, pipeline.encode_video(video, streams, models)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            encoded = dict(pool.map(work, manifest.videos))
    else:
        encoded = dict(work(v) for v in manifest.videos)
    pipeline.save_encoded(encoded, out_dir)
    index = {
        "fv_channels": channels,
        "dense_channels": [
            ch
            for ch in sorted({c for v in manifest.videos for c in v.channels})
            if manifest.channel_kind(ch) == "dense"
        ],
        "whiten": whiten,
    }
    with open(out_dir / "index.json", "w") as fh:
        json.dump(index, fh, indent=2, sort_keys=True)
        fh.write("\n")
    stamp.write_text(key + "\n")
    click.echo(f"{out_dir}: encoded {len(encoded)} videos")


@cli.command(name="train-nonaction")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--encoded", "encoded_dir", required=True, type=click.Path(exists=True))
@click.option("--models", "models_dir", required=True, type=click.Path(file_okay=False))
@click.option("--mode", default="generic", show_default=True,
              help="generic, specific=<class>, or loo=<class>.")
@click.option("--gamma", default=1.0, type=float, show_default=True)
@click.option("--tune", is_flag=True, help="Pick gamma on a validation split.")
def train_nonaction_cmd(manifest_path, encoded_dir, models_dir, mode, gamma, tune):
    """Train the non-action shot classifier on the train split."""
    manifest = load_manifest(manifest_path)
    mode_name, action = _parse_mode(mode)
    if action is not None and action not in manifest.classes:
        raise StageError(f"unknown class {action!r}; have {manifest.classes}")
    encoded = pipeline.load_encoded(manifest, encoded_dir)
    train_ids, _ = pipeline.split_videos(manifest)
    if tune:
        gamma = evaluation.tune_nonaction_gamma(
            manifest, encoded, train_ids, mode=mode_name, action=action
        )
        click.echo(f"tuned gamma: {gamma}")
    model = nonaction.train_nonaction(
        encoded, train_ids, mode=mode_name, action=action, gamma=gamma
    )
    Path(models_dir).mkdir(parents=True, exist_ok=True)
    out = Path(models_dir) / f"nonaction_{_mode_tag(mode_name, action)}.spmd"
    model_io.save_model(out, model)
    click.echo(f"{out}: dim {model.dim}")


@cli.command(name="score-shots")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--encoded", "encoded_dir", required=True, type=click.Path(exists=True))
@click.option("--models", "models_dir", required=True, type=click.Path(file_okay=False))
@click.option("--mode", default="generic", show_default=True)
@click.option("--split", default="test", type=click.Choice(["train", "test", "all"]))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def score_shots_cmd(manifest_path, encoded_dir, models_dir, mode, split, out_path):
    """Score every shot with the non-action classifier; write a CSV."""
    manifest = load_manifest(manifest_path)
    mode_name, action = _parse_mode(mode)
    model_path = _require(
        Path(models_dir) / f"nonaction_{_mode_tag(mode_name, action)}.spmd",
        "run train-nonaction first",
    )
    model = model_io.load_model(model_path)
    videos = _select_videos(manifest, split)
    encoded = pipeline.load_encoded(manifest, encoded_dir, videos=videos)
    scores = nonaction.score_shots(model, encoded, [v.video_id for v in videos])
    rows = [("video_id", "shot_index", "score", "label")]
    rows += [
        (s.video_id, s.shot_index, f"{s.score:.10f}", s.label.value)
        for s in scores
    ]
    Path(out_path).parent.mkdir(parents=True, exist_ok=True)
    _write_csv(out_path, rows)
    click.echo(f"{out_path}: {len(scores)} shots")


@cli.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--encoded", "encoded_dir", required=True, type=click.Path(exists=True))
@click.option("--models", "models_dir", required=True, type=click.Path(file_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--alpha", default=1.0, type=float, show_default=True)
@click.option("--window", default=25, type=int, show_default=True)
@click.option("--stride", default=None, type=int, help="Default: window size.")
@click.option("--fuse-dense", is_flag=True, help="Append dense channels to segments.")
@click.option("--mode", default="generic", show_default=True,
              help="Which non-action model scores the segments.")
def pool(manifest_path, encoded_dir, models_dir, out_dir, alpha, window, stride,
         fuse_dense, mode):
    """Pool segment features into one weighted feature per video."""
    manifest = load_manifest(manifest_path)
    mode_name, action = _parse_mode(mode)
    model_path = _require(
        Path(models_dir) / f"nonaction_{_mode_tag(mode_name, action)}.spmd",
        "run train-nonaction first",
    )
    model = model_io.load_model(model_path)
    encoded = pipeline.load_encoded(manifest, encoded_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = [("video_id", "segment_index", "start", "end", "score", "weight")]
    for video in manifest.videos:
        pooled = pooling.video_feature(
            encoded[video.video_id],
            model,
            alpha=alpha,
            window=window,
            stride=stride,
            fuse_dense=fuse_dense,
        )
        np.save(out_dir / f"{video.video_id}.npy", pooled.values)
        for i, seg in enumerate(pooled.segments):
            rows.append(
                (
                    video.video_id,
                    i,
                    seg.start,
                    seg.end,
                    f"{pooled.scores[i]:.10f}",
                    f"{pooled.weights[i]:.10f}",
                )
            )
    _write_csv(out_dir / "weights.csv", rows)
    click.echo(f"{out_dir}: pooled {len(manifest.videos)} videos (alpha={alpha})")


@cli.command(name="train-action")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--features", "features_dir", required=True, type=click.Path(exists=True))
@click.option("--models", "models_dir", required=True, type=click.Path(file_okay=False))
@click.option("--gamma", default=1.0, type=float, show_default=True)
@click.option("--tune", is_flag=True, help="Pick gamma on a validation split.")
def train_action(manifest_path, features_dir, models_dir, gamma, tune):
    """Train one-vs-rest action classifiers on per-video feature files."""
    manifest = load_manifest(manifest_path)
    train_ids, _ = pipeline.split_videos(manifest)
    feats = {}
    for vid in train_ids:
        path = _require(
            Path(features_dir) / f"{vid}.npy", "run pool or darwin first"
        )
        feats[vid] = np.load(path)
    if tune:
        gamma = evaluation.tune_action_gamma(manifest, feats, train_ids)
        click.echo(f"tuned gamma: {gamma}")
    X = np.stack([feats[v] for v in train_ids])
    labels = np.array([manifest.video(v).action_label for v in train_ids])
    Path(models_dir).mkdir(parents=True, exist_ok=True)
    for c in manifest.classes:
        y = np.where(labels == c, 1.0, -1.0)
        model = fit_lssvm(X, y, gamma=gamma)
        model_io.save_model(Path(models_dir) / f"action_{c}.spmd", model)
    click.echo(f"{models_dir}: trained {len(manifest.classes)} classifiers")


@cli.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--encoded", "encoded_dir", required=True, type=click.Path(exists=True))
@click.option("--models", "models_dir", default=None, type=click.Path(file_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--variant", default="plain", type=click.Choice(["plain", "weighted"]),
              show_default=True)
@click.option("--lambda", "lam", default=1.0, type=float, show_default=True)
@click.option("--alpha", default=1.0, type=float, show_default=True)
@click.option("--window", default=25, type=int, show_default=True)
@click.option("--stride", default=None, type=int)
@click.option("--per-second", is_flag=True, help="Segment-level instead of frame-level.")
def darwin(manifest_path, encoded_dir, models_dir, out_dir, variant, lam, alpha,
           window, stride, per_second):
    """Temporal-evolution features per video (plain or score-weighted)."""
    manifest = load_manifest(manifest_path)
    model = None
    if variant == "weighted":
        if models_dir is None:
            raise StageError("--models is required for the weighted variant")
        model_path = _require(
            Path(models_dir) / "nonaction_generic.spmd",
            "run train-nonaction first",
        )
        model = model_io.load_model(model_path)
    encoded = pipeline.load_encoded(manifest, encoded_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for video in manifest.videos:
        feat = darwin_video_feature(
            encoded[video.video_id],
            nonaction_model=model,
            lam=lam,
            alpha=alpha,
            window=window,
            stride=stride,
            per_second=per_second,
        )
        np.save(out_dir / f"{video.video_id}.npy", feat.u)
    click.echo(f"{out_dir}: {variant} features for {len(manifest.videos)} videos")


@cli.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--encoded", "encoded_dir", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--task", default="recognition",
              type=click.Choice(["recognition", "loo"]), show_default=True)
@click.option("--feature", default="pooled",
              type=click.Choice(["whole", "pooled", "darwin"]), show_default=True)
@click.option("--weighting", default="generic",
              type=click.Choice(["none", "generic", "specific"]), show_default=True)
@click.option("--alpha", default=1.0, type=float, show_default=True)
@click.option("--tune-alpha", is_flag=True)
@click.option("--fuse-dense", is_flag=True)
@click.option("--gamma", default=1.0, type=float, show_default=True)
@click.option("--tune", "tune_gamma", is_flag=True)
@click.option("--lambda", "lam", default=1.0, type=float, show_default=True)
@click.option("--window", default=25, type=int, show_default=True)
@click.option("--stride", default=None, type=int)
@click.option("--plot", is_flag=True, help="Also write PR curves as SVG.")
def evaluate(manifest_path, encoded_dir, out_dir, task, feature, weighting, alpha,
             tune_alpha, fuse_dense, gamma, tune_gamma, lam, window, stride, plot):
    """Run one experiment end-to-end and write report.json / report.csv."""
    manifest = load_manifest(manifest_path)
    encoded = pipeline.load_encoded(manifest, encoded_dir)
    config = ExperimentConfig(
        task="nonaction_loo" if task == "loo" else "recognition",
        feature=feature,
        weighting=weighting,
        alpha=alpha,
        tune_alpha=tune_alpha,
        fuse_dense=fuse_dense,
        gamma=gamma,
        tune_gamma=tune_gamma,
        svr_lambda=lam,
        window=window,
        stride=stride,
    )
    try:
        config.validate()
    except ValueError as exc:
        raise StageError(str(exc)) from None
    report = evaluation.run_experiment(manifest, encoded, config)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(report.to_json())
    _write_csv(out_dir / "report.csv", report.csv_rows())
    if plot and report.curves:
        evaluation.plot_pr_curves(report.curves, out_dir / "pr_curves.svg")
    if report.mean_ap is not None:
        click.echo(f"{out_dir}: mAP {report.mean_ap:.4f}")
    else:
        click.echo(f"{out_dir}: report written")


@cli.command(name="simulate-pruning")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--encoded", "encoded_dir", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--p-grid", default="0:0.1:1", show_default=True,
              help="start:step:end or comma-separated probabilities.")
@click.option("--repeats", default=20, type=int, show_default=True)
@click.option("--seed", default=0, type=int, show_default=True)
@click.option("--gamma", default=1.0, type=float, show_default=True)
@click.option("--no-retrain", is_flag=True,
              help="Reuse classifiers trained on unpruned features.")
@click.option("--plot", is_flag=True, help="Also write the sweep as SVG.")
def simulate_pruning_cmd(manifest_path, encoded_dir, out_dir, p_grid, repeats,
                         seed, gamma, no_retrain, plot):
    """Oracle-pruning benefit sweep over removal probabilities."""
    manifest = load_manifest(manifest_path)
    encoded = pipeline.load_encoded(manifest, encoded_dir)
    grid = _parse_grid(p_grid)
    points = evaluation.simulate_pruning(
        manifest,
        encoded,
        grid,
        repeats=repeats,
        seed=seed,
        gamma=gamma,
        retrain=not no_retrain,
    )
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = [("p", "map_mean", "map_std")]
    rows += [
        (f"{pt.p:.6f}", f"{pt.map_mean:.6f}", f"{pt.map_std:.6f}") for pt in points
    ]
    _write_csv(out_dir / "sweep.csv", rows)
    payload = [
        {
            "p": pt.p,
            "repeats": pt.repeats,
            "map_mean": pt.map_mean,
            "map_std": pt.map_std,
            "per_repeat": list(pt.per_repeat),
        }
        for pt in points
    ]
    with open(out_dir / "sweep.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if plot:
        evaluation.plot_sweep(points, out_dir / "sweep.svg")
    for pt in points:
        click.echo(f"p={pt.p:.2f}  mAP {pt.map_mean:.4f} +- {pt.map_std:.4f}")


def main(argv=None) -> int:
    """Entry point with the documented exit codes (0 ok, 1 invalid, 2 crash)."""
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except (ManifestError, ValueError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except Exception:
        traceback.print_exc(file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
